#pragma once

#include "rangehall/analytics.hpp"
#include "rangehall/definition.hpp"
#include "rangehall/error.hpp"
#include "rangehall/event.hpp"
#include "rangehall/event_log.hpp"
#include "rangehall/projection.hpp"
#include "rangehall/scoring.hpp"
#include "rangehall/simulator.hpp"
#include "rangehall/text_table.hpp"
#include "rangehall/time.hpp"
