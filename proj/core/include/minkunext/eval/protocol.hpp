#pragma once

#include "minkunext/eval/recall.hpp"
#include "minkunext/model/minkunext.hpp"
#include "minkunext/train/config.hpp"
#include "minkunext/train/dataset.hpp"
#include "minkunext/train/labels.hpp"

namespace minkunext {

/// Embeds the test split of every region in `data` and scores it by ordered
/// run pairs. Both protocols evaluate all regions; they differ only in the
/// regions used for training.
RecallReport evaluate_protocol(MinkUNeXt<float>& model, const Dataset& data, Protocol protocol,
                               const LabelConfig& labels = {}, std::size_t chunk = 32);

}  // namespace minkunext
