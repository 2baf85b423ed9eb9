#pragma once

#include "cdcnn/adam.hpp"
#include "cdcnn/baseline.hpp"
#include "cdcnn/checkpoint.hpp"
#include "cdcnn/dataset.hpp"
#include "cdcnn/error.hpp"
#include "cdcnn/evaluation.hpp"
#include "cdcnn/format.hpp"
#include "cdcnn/layers.hpp"
#include "cdcnn/model.hpp"
#include "cdcnn/parallel.hpp"
#include "cdcnn/rng.hpp"
#include "cdcnn/synthetic.hpp"
#include "cdcnn/tensor.hpp"
#include "cdcnn/training.hpp"
