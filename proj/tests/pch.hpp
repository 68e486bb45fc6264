#pragma once

#include <gtest/gtest.h>

#include "rangehall/server.hpp"
#include "oracles.hpp"
#include "support.hpp"
