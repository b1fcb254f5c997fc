#pragma once

#include <string>
#include <vector>

#include "sara/embed.hpp"

namespace sara::detail {

// Implemented in remote.cpp; keeps the HTTP client out of the hot headers.
std::vector<EmbeddingVector> remote_embed_batch(const EmbedBackendConfig& config,
                                                const std::vector<std::string>& texts);

}  // namespace sara::detail
