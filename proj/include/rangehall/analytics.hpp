#pragma once

#include "rangehall/analytics/behavior.hpp"
#include "rangehall/analytics/feedback.hpp"
#include "rangehall/analytics/infrastructure.hpp"
#include "rangehall/analytics/quality.hpp"
#include "rangehall/analytics/trouble.hpp"
