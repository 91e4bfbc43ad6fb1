// Copyright 2026 The attnlab Authors
// Dataset and checkpoint file formats.
//
// Licensed under the Apache License, Version 2.0

#ifndef ATTNLAB_IO_HPP
#define ATTNLAB_IO_HPP

#include <string>

#include "attnlab/dataset.hpp"
#include "attnlab/training.hpp"

namespace attnlab {

// Both formats share one layout: a single-line JSON header followed by the
// concatenated row-major 64-bit float payload in header order. Write ->
// read -> write reproduces the file byte for byte.

void save_dataset(const Dataset& dataset, const std::string& path);
Dataset load_dataset(const std::string& path);

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace attnlab

#endif  // ATTNLAB_IO_HPP
