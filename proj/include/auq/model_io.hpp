#pragma once
// Versioned JSON persistence for trained models: learner kind, scheme,
// config, parameters, and a fingerprint of the training anchor prior.

#include <filesystem>

#include "auq/model.hpp"

namespace auq {

void save_model(const std::filesystem::path& path, const DeltaModel& model);

// Throws on unreadable files, unknown format versions, or a stored prior
// fingerprint that no longer matches the reconstructed prior.
DeltaModel load_model(const std::filesystem::path& path);

}  // namespace auq
