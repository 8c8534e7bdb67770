#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "marginbench/tensor.hpp"

namespace marginbench {

struct Layer {
  enum class Kind { affine, relu };

  Kind kind = Kind::affine;
  Tensor weights;  // [out x in], affine only
  Tensor bias;     // [out], affine only

  static Layer affine(Tensor weights, Tensor bias);
  static Layer relu();
};

// Affine/ReLU stack whose last affine layer emits the logits.
class Classifier {
 public:
  Classifier() = default;
  Classifier(std::size_t input_dim, std::vector<Layer> layers);

  std::size_t input_dim() const { return input_dim_; }
  std::size_t class_count() const { return class_count_; }
  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<Layer>& layers() { return layers_; }

 private:
  std::size_t input_dim_ = 0;
  std::size_t class_count_ = 0;
  std::vector<Layer> layers_;
};

// Per-layer activations cached by forward; activations[0] is the input,
// activations[i+1] the output of layer i.
struct ForwardTrace {
  std::vector<Tensor> activations;
};

// Logits of the model at x. Pure and safe to call concurrently.
Tensor forward(const Classifier& model, const Tensor& x, ForwardTrace* trace = nullptr);

// Exact reverse-mode d(loss)/d(input) given d(loss)/d(logits).
// ReLU passes gradient iff its pre-activation is strictly positive
// (subgradient 0 at exactly 0).
Tensor input_gradient(const Classifier& model, const ForwardTrace& trace,
                      const Tensor& loss_grad_z);

// Gradients for the affine parameters, slot-aligned with model.layers()
// (relu slots hold empty tensors).
struct ParamGrads {
  std::vector<Tensor> weight_grads;
  std::vector<Tensor> bias_grads;

  void add(const ParamGrads& other);
  void scale_in_place(double s);
};

ParamGrads zero_param_grads(const Classifier& model);

// Same reverse pass extended to the weights; optionally also yields the
// input gradient.
ParamGrads param_gradient(const Classifier& model, const ForwardTrace& trace,
                          const Tensor& loss_grad_z, Tensor* input_grad = nullptr);

// theta <- theta - lr * grads, with grads already averaged over the batch.
void sgd_step(Classifier& model, const ParamGrads& grads, double lr);

// Model files are one JSON document; floats carry 17 significant digits so
// a save/load round trip reproduces every parameter bit-exactly.
std::string model_to_json(const Classifier& model);
Classifier model_from_json(const std::string& text);
void save_model(const Classifier& model, const std::string& path);
Classifier load_model(const std::string& path);

}  // namespace marginbench
