#pragma once

#include "cgigan/cgi.hpp"
#include "cgigan/classifier.hpp"
#include "cgigan/config.hpp"
#include "cgigan/datasets.hpp"
#include "cgigan/error.hpp"
#include "cgigan/evaluation.hpp"
#include "cgigan/imaging.hpp"
#include "cgigan/losses.hpp"
#include "cgigan/metrics.hpp"
#include "cgigan/models.hpp"
#include "cgigan/pipeline.hpp"
#include "cgigan/rng.hpp"
#include "cgigan/scoring.hpp"
#include "cgigan/storage.hpp"
#include "cgigan/training.hpp"
