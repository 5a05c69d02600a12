#pragma once

// Everything at once.
#include <neurodrill/errors.hpp>
#include <neurodrill/geometry.hpp>
#include <neurodrill/trajectory.hpp>
#include <neurodrill/robot_model.hpp>
#include <neurodrill/event_sim.hpp>
#include <neurodrill/multiview.hpp>
#include <neurodrill/event_cht.hpp>
#include <neurodrill/servo.hpp>
#include <neurodrill/event_io.hpp>
#include <neurodrill/report.hpp>
#include <neurodrill/scenario.hpp>
#include <neurodrill/bench.hpp>
