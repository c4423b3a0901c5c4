#pragma once

#include "otdrimg/config_json.hpp"
#include "otdrimg/encodings.hpp"
#include "otdrimg/error.hpp"
#include "otdrimg/evalkit.hpp"
#include "otdrimg/hash.hpp"
#include "otdrimg/imaging.hpp"
#include "otdrimg/ingest.hpp"
#include "otdrimg/mat.hpp"
#include "otdrimg/pipeline.hpp"
#include "otdrimg/png.hpp"
#include "otdrimg/rng.hpp"
