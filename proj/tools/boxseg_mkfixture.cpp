// Copyright 2026 The boxseg Authors
// SPDX-License-Identifier: Apache-2.0
//
// Writes a small synthetic dataset in voc_like layout.

#include <iostream>

#include "CLI11.hpp"
#include "boxseg/dataio/dataset_io.hpp"
#include "boxseg/dataio/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Write a synthetic voc_like dataset"};
  boxseg::SyntheticSpec spec;
  spec.images = 3;
  spec.width = 64;
  spec.height = 64;
  spec.num_classes = 5;
  spec.min_objects = 2;
  spec.max_objects = 3;
  spec.max_classes_per_image = 3;
  spec.min_semi_axis = 6;
  spec.max_semi_axis = 12;
  std::string out;
  app.add_option("--out", out, "output directory")->required();
  app.add_option("--images", spec.images);
  app.add_option("--width", spec.width);
  app.add_option("--height", spec.height);
  app.add_option("--classes", spec.num_classes);
  app.add_option("--max-classes-per-image", spec.max_classes_per_image);
  app.add_option("--seed", spec.seed);
  CLI11_PARSE(app, argc, argv);
  try {
    boxseg::write_voc_like(boxseg::make_synthetic_dataset(spec), out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
