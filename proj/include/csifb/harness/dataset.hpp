#pragma once

#include <string>

#include "csifb/detector.hpp"
#include "csifb/reconstruction.hpp"

namespace csifb {

// Binary dataset files: "CSFD" magic, u32 version, u32 kind, dims header,
// little-endian f64 payload (column-major), trailing FNV-1a 64 checksum.

void save_dataset(const DetectionDataset& ds, const std::string& path);
void save_dataset(const ReconstructionDataset& ds, const std::string& path);

DetectionDataset load_detection_dataset(const std::string& path);
ReconstructionDataset load_reconstruction_dataset(const std::string& path);

} // namespace csifb
