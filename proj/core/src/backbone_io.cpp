#include <sstream>

#include "csparts/backbone.hpp"
#include "csparts/errors.hpp"
#include "csparts/tensor_io.hpp"
#include "text_kv.hpp"

namespace csparts {

namespace {
constexpr std::string_view kHeader = "csparts-backbone v1";
}

void save_backbone(const std::filesystem::path& stem, const BackboneParams& p) {
  std::ostringstream txt;
  txt << kHeader << "\n"
      << "input_height " << p.input_height << "\n"
      << "input_width " << p.input_width << "\n"
      << "input_channels " << p.input_channels << "\n"
      << "architecture " << p.architecture() << "\n"
      << "feature_dim " << p.feature_dim() << "\n"
      << "seed " << p.seed << "\n"
      << "parameters " << p.parameter_count() << "\n";
  detail::write_text(detail::with_suffix(stem, ".arch.txt"), txt.str());

  // Flat payload: for each conv in order, its weights then its biases.
  std::vector<float> flat;
  flat.reserve(p.parameter_count());
  for (const auto& c : p.convs) {
    flat.insert(flat.end(), c.weight.begin(), c.weight.end());
    flat.insert(flat.end(), c.bias.begin(), c.bias.end());
  }
  const std::uint64_t dims[1] = {flat.size()};
  write_tensor(detail::with_suffix(stem, ".psf"), dims, flat);
}

BackboneParams load_backbone(const std::filesystem::path& stem) {
  const auto txt_path = detail::with_suffix(stem, ".arch.txt");
  const auto kv = detail::read_kv(txt_path, kHeader);
  BackboneParams p = make_backbone(kv.at("architecture", txt_path), kv.size_at("input_height", txt_path),
                                   kv.size_at("input_width", txt_path), kv.size_at("input_channels", txt_path), 0);
  p.seed = std::stoull(kv.at("seed", txt_path));

  const auto psf_path = detail::with_suffix(stem, ".psf");
  const Tensor t = read_tensor(psf_path);
  if (t.dims.size() != 1 || t.dims[0] != p.parameter_count() || kv.size_at("parameters", txt_path) != p.parameter_count())
    throw FormatError("backbone weights in '" + psf_path.string() + "' do not match architecture '" +
                      p.architecture() + "'");
  std::size_t off = 0;
  for (auto& c : p.convs) {
    std::copy_n(t.data.begin() + static_cast<std::ptrdiff_t>(off), c.weight.size(), c.weight.begin());
    off += c.weight.size();
    std::copy_n(t.data.begin() + static_cast<std::ptrdiff_t>(off), c.bias.size(), c.bias.begin());
    off += c.bias.size();
  }
  return p;
}

PrecomputedBackbone load_precomputed(const std::filesystem::path& stack_path, const std::filesystem::path& grads_path,
                                     std::size_t feature_dim, std::size_t height, std::size_t width,
                                     std::size_t channels) {
  const Tensor st = read_tensor(stack_path);
  if (st.dims.size() != 3 || st.dims[0] != feature_dim)
    throw ArgumentError("channel stack '" + stack_path.string() + "' must have dims [" + std::to_string(feature_dim) +
                        ",s,u]");
  const Tensor gt = read_tensor(grads_path);
  if (gt.dims.size() != 4 || gt.dims[0] != feature_dim || gt.dims[1] != height || gt.dims[2] != width ||
      gt.dims[3] != channels) {
    std::ostringstream msg;
    msg << "gradient tensor '" << grads_path.string() << "' must have dims [" << feature_dim << "," << height << ","
        << width << "," << channels << "]";
    throw ArgumentError(msg.str());
  }
  PrecomputedBackbone out;
  out.stack = ChannelStack(feature_dim, st.dims[1], st.dims[2], st.data);
  const std::size_t n = height * width * channels;
  out.gradients.resize(feature_dim);
  for (std::size_t d = 0; d < feature_dim; ++d) {
    out.gradients[d] = {height, width, channels, std::vector<float>(n)};
    std::copy_n(gt.data.begin() + static_cast<std::ptrdiff_t>(d * n), n, out.gradients[d].data.begin());
  }
  return out;
}

}  // namespace csparts
