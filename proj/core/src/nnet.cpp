#include "marginbench/nnet.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "marginbench/errors.hpp"

namespace marginbench {

Layer Layer::affine(Tensor weights, Tensor bias) {
  if (weights.rank() != 2 || bias.rank() != 1 || weights.extent(0) != bias.size()) {
    throw DimensionError("affine layer: weights must be [out x in] with matching bias");
  }
  Layer l;
  l.kind = Kind::affine;
  l.weights = std::move(weights);
  l.bias = std::move(bias);
  return l;
}

Layer Layer::relu() {
  Layer l;
  l.kind = Kind::relu;
  return l;
}

Classifier::Classifier(std::size_t input_dim, std::vector<Layer> layers)
    : input_dim_(input_dim), layers_(std::move(layers)) {
  std::size_t width = input_dim_;
  bool saw_affine = false;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const Layer& l = layers_[i];
    if (l.kind == Layer::Kind::affine) {
      if (l.weights.extent(1) != width) {
        throw DimensionError("layer " + std::to_string(i) + ": in_dim " +
                             std::to_string(l.weights.extent(1)) +
                             " does not chain with preceding width " + std::to_string(width));
      }
      if (!l.weights.all_finite() || !l.bias.all_finite()) {
        throw DimensionError("layer " + std::to_string(i) + ": non-finite parameters");
      }
      width = l.weights.extent(0);
      saw_affine = true;
    }
  }
  if (layers_.empty() || layers_.back().kind != Layer::Kind::affine || !saw_affine) {
    throw DimensionError("classifier must end in an affine logits layer");
  }
  class_count_ = width;
  if (class_count_ < 2) throw DimensionError("classifier needs at least 2 classes");
}

Tensor forward(const Classifier& model, const Tensor& x, ForwardTrace* trace) {
  if (x.rank() != 1 || x.size() != model.input_dim()) {
    throw DimensionError("forward: input has " + std::to_string(x.size()) +
                         " entries, model expects " + std::to_string(model.input_dim()));
  }
  Tensor a = x;
  if (trace) {
    trace->activations.clear();
    trace->activations.reserve(model.layers().size() + 1);
    trace->activations.push_back(a);
  }
  for (const Layer& l : model.layers()) {
    if (l.kind == Layer::Kind::affine) {
      Tensor next = matvec(l.weights, a);
      for (std::size_t i = 0; i < next.size(); ++i) next[i] += l.bias[i];
      a = std::move(next);
    } else {
      for (std::size_t i = 0; i < a.size(); ++i) a[i] = a[i] > 0.0 ? a[i] : 0.0;
    }
    if (trace) trace->activations.push_back(a);
  }
  return a;
}

namespace {

void check_trace(const Classifier& model, const ForwardTrace& trace, const Tensor& loss_grad_z) {
  if (trace.activations.size() != model.layers().size() + 1) {
    throw DimensionError("stale trace: length does not match the layer count");
  }
  if (trace.activations.front().size() != model.input_dim() ||
      loss_grad_z.size() != model.class_count()) {
    throw DimensionError("stale trace or loss gradient: shape mismatch");
  }
}

}  // namespace

Tensor input_gradient(const Classifier& model, const ForwardTrace& trace,
                      const Tensor& loss_grad_z) {
  check_trace(model, trace, loss_grad_z);
  Tensor g = loss_grad_z;
  for (std::size_t li = model.layers().size(); li-- > 0;) {
    const Layer& l = model.layers()[li];
    const Tensor& in = trace.activations[li];
    if (l.kind == Layer::Kind::relu) {
      Tensor gin = g;
      for (std::size_t i = 0; i < gin.size(); ++i) {
        if (in[i] <= 0.0) gin[i] = 0.0;
      }
      g = std::move(gin);
    } else {
      std::size_t rows = l.weights.extent(0);
      std::size_t cols = l.weights.extent(1);
      if (g.size() != rows) throw DimensionError("stale trace: affine gradient shape mismatch");
      Tensor gin = Tensor::zeros({cols});
      const double* wd = l.weights.data().data();
      for (std::size_t i = 0; i < rows; ++i) {
        const double* row = wd + i * cols;
        double gi = g[i];
        for (std::size_t j = 0; j < cols; ++j) gin[j] += row[j] * gi;
      }
      g = std::move(gin);
    }
  }
  return g;
}

void ParamGrads::add(const ParamGrads& other) {
  if (weight_grads.size() != other.weight_grads.size()) {
    throw DimensionError("param grads: layer count mismatch");
  }
  for (std::size_t i = 0; i < weight_grads.size(); ++i) {
    if (weight_grads[i].size() == 0) continue;
    axpy(weight_grads[i], 1.0, other.weight_grads[i]);
    axpy(bias_grads[i], 1.0, other.bias_grads[i]);
  }
}

void ParamGrads::scale_in_place(double s) {
  for (std::size_t i = 0; i < weight_grads.size(); ++i) {
    if (weight_grads[i].size() == 0) continue;
    for (double& v : weight_grads[i].data()) v *= s;
    for (double& v : bias_grads[i].data()) v *= s;
  }
}

ParamGrads zero_param_grads(const Classifier& model) {
  ParamGrads g;
  g.weight_grads.resize(model.layers().size());
  g.bias_grads.resize(model.layers().size());
  for (std::size_t i = 0; i < model.layers().size(); ++i) {
    const Layer& l = model.layers()[i];
    if (l.kind == Layer::Kind::affine) {
      g.weight_grads[i] = Tensor::zeros({l.weights.extent(0), l.weights.extent(1)});
      g.bias_grads[i] = Tensor::zeros({l.bias.size()});
    }
  }
  return g;
}

ParamGrads param_gradient(const Classifier& model, const ForwardTrace& trace,
                          const Tensor& loss_grad_z, Tensor* input_grad) {
  check_trace(model, trace, loss_grad_z);
  ParamGrads grads = zero_param_grads(model);
  Tensor g = loss_grad_z;
  for (std::size_t li = model.layers().size(); li-- > 0;) {
    const Layer& l = model.layers()[li];
    const Tensor& in = trace.activations[li];
    if (l.kind == Layer::Kind::relu) {
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (in[i] <= 0.0) g[i] = 0.0;
      }
    } else {
      std::size_t rows = l.weights.extent(0);
      std::size_t cols = l.weights.extent(1);
      Tensor& wg = grads.weight_grads[li];
      for (std::size_t i = 0; i < rows; ++i) {
        double gi = g[i];
        grads.bias_grads[li][i] += gi;
        double* wrow = wg.data().data() + i * cols;
        for (std::size_t j = 0; j < cols; ++j) wrow[j] += gi * in[j];
      }
      Tensor gin = Tensor::zeros({cols});
      const double* wd = l.weights.data().data();
      for (std::size_t i = 0; i < rows; ++i) {
        const double* row = wd + i * cols;
        double gi = g[i];
        for (std::size_t j = 0; j < cols; ++j) gin[j] += row[j] * gi;
      }
      g = std::move(gin);
    }
  }
  if (input_grad) *input_grad = std::move(g);
  return grads;
}

void sgd_step(Classifier& model, const ParamGrads& grads, double lr) {
  if (lr <= 0.0) throw UsageError("sgd_step: learning rate must be > 0");
  if (grads.weight_grads.size() != model.layers().size()) {
    throw DimensionError("sgd_step: gradient layer count mismatch");
  }
  for (std::size_t i = 0; i < model.layers().size(); ++i) {
    Layer& l = model.layers()[i];
    if (l.kind != Layer::Kind::affine) continue;
    if (!grads.weight_grads[i].same_shape(l.weights) ||
        !grads.bias_grads[i].same_shape(l.bias)) {
      throw DimensionError("sgd_step: gradient shape mismatch at layer " + std::to_string(i));
    }
    axpy(l.weights, -lr, grads.weight_grads[i]);
    axpy(l.bias, -lr, grads.bias_grads[i]);
  }
}

namespace {

void append_double(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out += buf;
}

void append_array(std::string& out, const std::vector<double>& values) {
  out += '[';
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    append_double(out, values[i]);
  }
  out += ']';
}

}  // namespace

std::string model_to_json(const Classifier& model) {
  for (std::size_t i = 0; i < model.layers().size(); ++i) {
    const Layer& l = model.layers()[i];
    if (l.kind == Layer::Kind::affine && (!l.weights.all_finite() || !l.bias.all_finite())) {
      throw UsageError("model_to_json: layer " + std::to_string(i) + " has non-finite parameters");
    }
  }
  std::string out;
  out += "{\"input_dim\":" + std::to_string(model.input_dim());
  out += ",\"classes\":" + std::to_string(model.class_count());
  out += ",\"layers\":[";
  for (std::size_t i = 0; i < model.layers().size(); ++i) {
    const Layer& l = model.layers()[i];
    if (i) out += ',';
    if (l.kind == Layer::Kind::relu) {
      out += "{\"kind\":\"relu\"}";
    } else {
      out += "{\"kind\":\"affine\",\"in\":" + std::to_string(l.weights.extent(1));
      out += ",\"out\":" + std::to_string(l.weights.extent(0));
      out += ",\"weights\":";
      append_array(out, l.weights.data());
      out += ",\"bias\":";
      append_array(out, l.bias.data());
      out += '}';
    }
  }
  out += "]}";
  return out;
}

Classifier model_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("model file: invalid JSON: ") + e.what());
  }
  auto require = [&](const nlohmann::json& obj, const char* field,
                     const std::string& where) -> const nlohmann::json& {
    auto it = obj.find(field);
    if (it == obj.end()) throw ParseError("model file: missing field " + where + field);
    return *it;
  };

  if (!doc.is_object()) throw ParseError("model file: top level must be an object");
  const auto& jdim = require(doc, "input_dim", "");
  const auto& jclasses = require(doc, "classes", "");
  const auto& jlayers = require(doc, "layers", "");
  if (!jdim.is_number_unsigned() || !jclasses.is_number_unsigned()) {
    throw ParseError("model file: input_dim and classes must be non-negative integers");
  }
  if (!jlayers.is_array()) throw ParseError("model file: layers must be an array");

  std::size_t input_dim = jdim.get<std::size_t>();
  std::size_t classes = jclasses.get<std::size_t>();

  std::vector<Layer> layers;
  for (std::size_t i = 0; i < jlayers.size(); ++i) {
    const auto& jl = jlayers[i];
    std::string where = "layers[" + std::to_string(i) + "].";
    if (!jl.is_object()) throw ParseError("model file: " + where + " must be an object");
    const auto& jkind = require(jl, "kind", where);
    if (!jkind.is_string()) throw ParseError("model file: " + where + "kind must be a string");
    std::string kind = jkind.get<std::string>();
    if (kind == "relu") {
      layers.push_back(Layer::relu());
      continue;
    }
    if (kind != "affine") {
      throw ParseError("model file: " + where + "kind: unknown value \"" + kind + "\"");
    }
    const auto& jin = require(jl, "in", where);
    const auto& jout = require(jl, "out", where);
    const auto& jw = require(jl, "weights", where);
    const auto& jb = require(jl, "bias", where);
    if (!jin.is_number_unsigned() || !jout.is_number_unsigned()) {
      throw ParseError("model file: " + where + "in/out must be non-negative integers");
    }
    std::size_t in = jin.get<std::size_t>();
    std::size_t out = jout.get<std::size_t>();
    if (!jw.is_array() || jw.size() != in * out) {
      throw ParseError("model file: " + where + "weights: expected " +
                       std::to_string(in * out) + " values, got " +
                       std::to_string(jw.is_array() ? jw.size() : 0));
    }
    if (!jb.is_array() || jb.size() != out) {
      throw ParseError("model file: " + where + "bias: expected " + std::to_string(out) +
                       " values, got " + std::to_string(jb.is_array() ? jb.size() : 0));
    }
    std::vector<double> w(in * out), b(out);
    for (std::size_t k = 0; k < w.size(); ++k) {
      if (!jw[k].is_number()) throw ParseError("model file: " + where + "weights: non-numeric entry");
      w[k] = jw[k].get<double>();
      if (!std::isfinite(w[k])) throw ParseError("model file: " + where + "weights: non-finite entry");
    }
    for (std::size_t k = 0; k < b.size(); ++k) {
      if (!jb[k].is_number()) throw ParseError("model file: " + where + "bias: non-numeric entry");
      b[k] = jb[k].get<double>();
      if (!std::isfinite(b[k])) throw ParseError("model file: " + where + "bias: non-finite entry");
    }
    layers.push_back(Layer::affine(Tensor::matrix(out, in, std::move(w)),
                                   Tensor::vector(std::move(b))));
  }

  Classifier model;
  try {
    model = Classifier(input_dim, std::move(layers));
  } catch (const DimensionError& e) {
    throw ParseError(std::string("model file: inconsistent dimensions: ") + e.what());
  }
  if (model.class_count() != classes) {
    throw ParseError("model file: classes is " + std::to_string(classes) +
                     " but the last affine layer emits " + std::to_string(model.class_count()));
  }
  return model;
}

void save_model(const Classifier& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << model_to_json(model) << '\n';
  if (!out) throw IoError("write failed: " + path);
}

Classifier load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return model_from_json(ss.str());
}

}  // namespace marginbench
