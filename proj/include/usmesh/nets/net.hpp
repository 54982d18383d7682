#pragma once

#include "usmesh/nets/ops.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace usmesh::nn {

enum class Arch { UNet, AttUNet, R2UNet, SEUNet, UNetPP, WNet };

struct NetSpec {
  Arch arch = Arch::UNet;
  int nf = 16;
  Activation ac = Activation::Sigmoid;
  int height = 256;
  int width = 256;
  int in_channels = 3;
  int out_channels = 3;
  int nr = 2;  // R2 recurrence steps
  int nc = 2;  // R2 convolutions per block
  int depth = 5;
  bool deep_supervision = false;  // U-Net++ only

  bool operator==(const NetSpec&) const = default;
};

std::string to_string(Arch arch);
Arch parse_arch(const std::string& name);
std::string to_string(Activation act);
Activation parse_activation(const std::string& name);

/// Canonical `key=value;...` form, embedded in checkpoints.
std::string spec_string(const NetSpec& spec);
NetSpec parse_spec_string(const std::string& text);

/// Throws ShapeError / ArgumentError for an unusable spec.
void validate(const NetSpec& spec);

/// Closed-form trainable parameter count (conv kernels and biases, batch-norm
/// gamma and beta, dense layers). Running batch-norm statistics are buffers.
std::int64_t count_params(const NetSpec& spec);

/// Closed-form count per named layer, in construction order.
struct LayerCount {
  std::string layer;
  std::int64_t params = 0;
};
std::vector<LayerCount> count_params_by_layer(const NetSpec& spec);

template <typename Scalar>
struct NamedVar {
  std::string name;
  Var<Scalar> var;
};

/// Intermediate tensors recorded during a forward pass for inspection.
template <typename Scalar>
struct Probe {
  std::vector<Tensor<Scalar>> attention_masks;  // (n, 1, h, w) per gate
  std::vector<Tensor<Scalar>> se_gains;         // (n, c, 1, 1) per SE block
};

template <typename Scalar>
struct ForwardContext {
  bool training = false;
  Scalar momentum = Scalar(0.99);
  Scalar eps = Scalar(1e-3);
  Probe<Scalar>* probe = nullptr;
};

template <typename Scalar>
class Body;

template <typename Scalar>
class Net {
 public:
  Net(NetSpec spec, std::uint64_t seed);
  ~Net();
  Net(Net&&) noexcept;
  Net& operator=(Net&&) noexcept;

  const NetSpec& spec() const { return spec_; }

  /// Input (n, in_channels, height, width) -> (n, out_channels, height, width),
  /// activated by spec().ac. Throws ShapeError on any other input shape.
  Var<Scalar> forward(const Var<Scalar>& x, bool training, Probe<Scalar>* probe = nullptr);

  /// Inference-mode forward without graph recording.
  Tensor<Scalar> predict(const Tensor<Scalar>& x);

  const std::vector<NamedVar<Scalar>>& parameters() const { return params_; }
  /// Running batch-norm statistics, stored as (1, c, 1, 1) tensors.
  const std::vector<NamedVar<Scalar>>& buffers() const { return buffers_; }
  std::int64_t parameter_count() const;
  /// Instantiated parameter counts grouped by layer name.
  std::vector<LayerCount> layer_report() const;

  /// Copies of every parameter and buffer, in declaration order.
  std::vector<Tensor<Scalar>> snapshot() const;
  void restore(const std::vector<Tensor<Scalar>>& state);

  void zero_grad();

  Scalar bn_momentum = Scalar(0.99);
  Scalar bn_eps = Scalar(1e-3);

 private:
  friend class Body<Scalar>;

  NetSpec spec_;
  std::vector<NamedVar<Scalar>> params_;
  std::vector<NamedVar<Scalar>> buffers_;
  std::unique_ptr<Body<Scalar>> body_;
};

extern template class Net<float>;
extern template class Net<double>;

/// Named-tensor archive with the spec string as a header record.
void save_checkpoint(const std::filesystem::path& path, const Net<float>& net);
/// Loads into `net`; throws SpecMismatchError when the stored spec differs.
void load_checkpoint(const std::filesystem::path& path, Net<float>& net);
/// Builds a net from the stored spec and loads its weights.
Net<float> load_checkpoint(const std::filesystem::path& path);
NetSpec read_checkpoint_spec(const std::filesystem::path& path);

}  // namespace usmesh::nn
