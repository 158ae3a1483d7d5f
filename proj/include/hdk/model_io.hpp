#pragma once

#include <string>

#include "hdk/classify.hpp"

namespace hdk {

/// Model bundle file format: a JSON document with a "format" version
/// field ("hdkernel-model/1"), the payload, and an FNV-1a checksum of
/// the payload text. Doubles are written at round-trip precision, so a
/// saved model reproduces the original's decision values bit for bit.
/// Only the support vectors of each classifier are stored.
void save_model(const MulticlassModel& model, const std::string& path);
MulticlassModel load_model(const std::string& path);

inline constexpr const char* kModelFormat = "hdkernel-model/1";

}  // namespace hdk
