#pragma once

#include "colmp/artifact.hpp"
#include "colmp/classifier.hpp"
#include "colmp/closed_form.hpp"
#include "colmp/data_model.hpp"
#include "colmp/error.hpp"
#include "colmp/evaluation.hpp"
#include "colmp/fixture.hpp"
#include "colmp/gpr.hpp"
#include "colmp/linear.hpp"
#include "colmp/metrics.hpp"
#include "colmp/nn.hpp"
#include "colmp/pipeline.hpp"
#include "colmp/random.hpp"
#include "colmp/service.hpp"
#include "colmp/standardize.hpp"
