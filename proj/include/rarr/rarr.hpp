#pragma once

// Convenience include for the whole library.

#include "rarr/checkpoint.hpp"
#include "rarr/cli.hpp"
#include "rarr/config.hpp"
#include "rarr/corpus.hpp"
#include "rarr/digest.hpp"
#include "rarr/eval.hpp"
#include "rarr/knn.hpp"
#include "rarr/labels.hpp"
#include "rarr/loss.hpp"
#include "rarr/manifest.hpp"
#include "rarr/model.hpp"
#include "rarr/nn.hpp"
#include "rarr/rng.hpp"
#include "rarr/signal.hpp"
#include "rarr/synth.hpp"
#include "rarr/tensor.hpp"
#include "rarr/train.hpp"
#include "rarr/wav.hpp"
