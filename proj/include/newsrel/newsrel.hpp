#pragma once

#include "newsrel/autograd.hpp"
#include "newsrel/config.hpp"
#include "newsrel/corpus.hpp"
#include "newsrel/csv.hpp"
#include "newsrel/embeddings.hpp"
#include "newsrel/ensemble_eval.hpp"
#include "newsrel/error.hpp"
#include "newsrel/models/baselines.hpp"
#include "newsrel/models/classifier.hpp"
#include "newsrel/models/cls_head.hpp"
#include "newsrel/models/encoder.hpp"
#include "newsrel/parameters.hpp"
#include "newsrel/random.hpp"
#include "newsrel/results_table.hpp"
#include "newsrel/sweep.hpp"
#include "newsrel/synthetic.hpp"
#include "newsrel/tensor.hpp"
#include "newsrel/text_util.hpp"
#include "newsrel/tokenization.hpp"
#include "newsrel/training.hpp"
#include "newsrel/version.hpp"
