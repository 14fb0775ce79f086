#pragma once

#include <string>

#include "csifb/detector.hpp"
#include "csifb/reconstruction.hpp"

namespace csifb::nn {

enum class CheckpointFault {
    BadMagic,
    BadVersion,
    BadChecksum,   // includes truncated files
    DimsMismatch,  // structural damage or config mismatch
};

class CheckpointError : public DataError {
public:
    CheckpointError(CheckpointFault fault, const std::string& msg)
        : DataError(msg), fault_(fault) {}
    CheckpointFault fault() const { return fault_; }

private:
    CheckpointFault fault_;
};

// Binary format v1: "CSFB" magic, u32 version, u32 network kind, a dims
// header, little-endian f64 tensors (column-major), running BN stats,
// and a trailing FNV-1a 64 checksum over everything before it.

void save_checkpoint(const DetectionNetwork& net, const std::string& path);
void save_checkpoint(const RefinementNetwork& net, const std::string& path);

DetectionNetwork load_detection_checkpoint(const std::string& path);
RefinementNetwork load_refinement_checkpoint(const std::string& path);

/// Same as above but also verifies the stored dims/constants against the
/// config; mismatch raises CheckpointFault::DimsMismatch.
DetectionNetwork load_detection_checkpoint(const std::string& path,
                                           const SystemConfig& cfg);
RefinementNetwork load_refinement_checkpoint(const std::string& path,
                                             const SystemConfig& cfg);

} // namespace csifb::nn
