#pragma once

// Part-aware 3D mesh generative autoencoder toolkit: spectral graph
// convolutions over a quadric decimation hierarchy, latent factorization
// into part encodings, and sparse-NMF local weights binding each part to a
// spatial region.

#include "meshparts/checkpoint.hpp"
#include "meshparts/chebconv.hpp"
#include "meshparts/config.hpp"
#include "meshparts/dataset.hpp"
#include "meshparts/decimate.hpp"
#include "meshparts/dense_matrix.hpp"
#include "meshparts/distance.hpp"
#include "meshparts/edit.hpp"
#include "meshparts/errors.hpp"
#include "meshparts/hierarchy.hpp"
#include "meshparts/laplacian.hpp"
#include "meshparts/mesh.hpp"
#include "meshparts/mesh_io.hpp"
#include "meshparts/model.hpp"
#include "meshparts/model_graph.hpp"
#include "meshparts/nmf.hpp"
#include "meshparts/optimizer.hpp"
#include "meshparts/pca.hpp"
#include "meshparts/report.hpp"
#include "meshparts/rng.hpp"
#include "meshparts/sparse_matrix.hpp"
#include "meshparts/tape.hpp"
#include "meshparts/train.hpp"
