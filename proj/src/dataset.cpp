#include "malfew/dataset.hpp"

#include "malfew/error.hpp"

namespace malfew::trainer {

using binfeed::LineageKind;

ImageBank ImageBank::build(binfeed::Manifest manifest, RenderOptions options) {
  ImageBank bank;
  bank.manifest_ = std::move(manifest);
  bank.options_ = options;
  const auto& m = bank.manifest_;
  bank.images_.resize(m.size());
  bank.variants_.resize(m.size());
  // Parents precede children in a manifest, so one forward pass suffices.
  for (std::size_t i = 0; i < m.size(); ++i) {
    const auto& e = m.at(i);
    if (e.lineage.kind == LineageKind::Augmented) {
      const auto parent = *m.find(e.lineage.parent_id);
      bank.images_[i] = entropix::rotate(bank.images_[parent], e.lineage.rotation);
    } else {
      bank.images_[i] = entropix::render_entropy_image(binfeed::load_entry(m, i), options.block_size,
                                                       options.width_blocks);
    }
    if (e.lineage.kind == LineageKind::Obfuscated) bank.variants_[m.root_of(i)].push_back(i);
  }
  return bank;
}

std::vector<std::size_t> ImageBank::variants(std::size_t root, std::optional<std::uint32_t> frequency) const {
  std::vector<std::size_t> out;
  for (auto v : variants_.at(root)) {
    if (!frequency || manifest_.at(v).lineage.frequency == *frequency) out.push_back(v);
  }
  return out;
}

entropix::EntropyImage ImageBank::obfuscated_image(std::size_t unit, std::size_t variant) const {
  const auto& e = manifest_.at(unit);
  if (manifest_.root_of(variant) != manifest_.root_of(unit)) {
    throw Error(ErrorCode::InvalidArgument, "variant does not descend from the unit's root");
  }
  if (e.lineage.kind == LineageKind::Augmented) return entropix::rotate(images_.at(variant), e.lineage.rotation);
  return images_.at(variant);
}

}  // namespace malfew::trainer
