#pragma once

#include "spdc/analysis.hpp"
#include "spdc/config.hpp"
#include "spdc/detection_electronics.hpp"
#include "spdc/error.hpp"
#include "spdc/nelder_mead.hpp"
#include "spdc/protocol.hpp"
#include "spdc/quantum_model.hpp"
#include "spdc/random.hpp"
#include "spdc/records_io.hpp"
#include "spdc/source_kinematics.hpp"
#include "spdc/calibration.hpp"
