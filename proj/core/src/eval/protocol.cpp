#include "minkunext/eval/protocol.hpp"

#include <stdexcept>
#include <string>

#include "minkunext/eval/descriptor_db.hpp"

namespace minkunext {

RecallReport evaluate_protocol(MinkUNeXt<float>& model, const Dataset& data, Protocol protocol,
                               const LabelConfig& labels, std::size_t chunk) {
  const auto records = data.select(Split::test);
  if (records.empty()) throw std::invalid_argument("dataset has no test records");
  const DescriptorDB db = embed_dataset(model, records, chunk);
  return evaluate_descriptors(db, labels, std::string(to_string(protocol)));
}

}  // namespace minkunext
