#pragma once

#include "common.hpp"
#include "dfg.hpp"
#include "folding.hpp"
#include "netlist.hpp"
#include "blocks.hpp"
#include "oracle.hpp"
#include "architectures.hpp"
#include "commands.hpp"
