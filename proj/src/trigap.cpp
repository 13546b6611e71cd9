#include "hommax/trigap.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <optional>

namespace hommax {

namespace {

bool negligible(const Coeff& c, int ncomp) {
  for (int i = 0; i < ncomp; ++i) {
    if (std::abs(c[i]) >= kPruneThreshold) return false;
  }
  return true;
}

double quantize(double f) {
  return std::round(f / kFrequencyQuantum) * kFrequencyQuantum;
}

void require_same_dim(const TrigPoly& u, const TrigPoly& v, const char* op) {
  if (u.dim() != v.dim()) {
    throw InputError(fmt::format("{}: dimension mismatch ({} vs {})", op, u.dim(), v.dim()));
  }
}

// Existing key equal to k or within one quantum per component: sums of
// rounded keys may sit one quantum off the rounded sum.
template <class Map>
auto find_near(Map& terms, const FreqKey& k, int dim) {
  auto it = terms.find(k);
  if (it != terms.end() || terms.empty()) return it;
  int offsets = 1;
  for (int i = 0; i < dim; ++i) offsets *= 3;
  for (int code = 0; code < offsets; ++code) {
    FreqKey probe = k;
    int rest = code;
    for (int i = 0; i < dim; ++i, rest /= 3) probe[i] += rest % 3 - 1;
    if (probe == k) continue;
    it = terms.find(probe);
    if (it != terms.end()) return it;
  }
  return terms.end();
}

}  // namespace

TrigPoly::TrigPoly(int dim, ValueRank rank) : dim_(dim), rank_(rank) {
  if (dim != 1 && dim != 3 && dim != 4) {
    throw InputError(fmt::format("TrigPoly: unsupported dimension {}", dim));
  }
}

TrigPoly TrigPoly::constant(int dim, cplx value) {
  TrigPoly p(dim, ValueRank::scalar);
  const std::array<double, 4> zero{};
  p.add_term(std::span(zero.data(), dim), value);
  return p;
}

TrigPoly TrigPoly::constant(int dim, const Vec3c& value) {
  TrigPoly p(dim, ValueRank::vector3);
  const std::array<double, 4> zero{};
  p.add_term(std::span(zero.data(), dim), Coeff{value(0), value(1), value(2)});
  return p;
}

TrigPoly TrigPoly::monomial(int dim, std::span<const double> freq, cplx c) {
  TrigPoly p(dim, ValueRank::scalar);
  p.add_term(freq, c);
  return p;
}

TrigPoly TrigPoly::monomial(int dim, std::span<const double> freq, const Vec3c& c) {
  TrigPoly p(dim, ValueRank::vector3);
  p.add_term(freq, Coeff{c(0), c(1), c(2)});
  return p;
}

void TrigPoly::check_freq(std::span<const double> freq) const {
  if (static_cast<int>(freq.size()) != dim_) {
    throw InputError(
        fmt::format("TrigPoly: frequency has {} components, expected {}", freq.size(), dim_));
  }
}

FreqKey TrigPoly::key(std::span<const double> freq) const {
  check_freq(freq);
  FreqKey k{0, 0, 0, 0};
  for (int i = 0; i < dim_; ++i) {
    k[i] = static_cast<std::int64_t>(std::llround(freq[i] / kFrequencyQuantum));
  }
  return k;
}

std::vector<double> TrigPoly::frequency(const FreqKey& key) const {
  std::vector<double> f(dim_);
  for (int i = 0; i < dim_; ++i) f[i] = static_cast<double>(key[i]) * kFrequencyQuantum;
  return f;
}

void TrigPoly::add_term(std::span<const double> freq, const Coeff& c) {
  const FreqKey k = key(freq);
  Coeff value = c;
  if (rank_ == ValueRank::scalar) value[1] = value[2] = 0.0;
  auto it = find_near(terms_, k, dim_);
  if (it != terms_.end()) {
    for (int i = 0; i < 3; ++i) it->second[i] += value[i];
    if (negligible(it->second, components())) terms_.erase(it);
    return;
  }
  if (!negligible(value, components())) terms_.emplace(k, value);
}

Coeff TrigPoly::coefficient(std::span<const double> freq) const {
  auto it = find_near(terms_, key(freq), dim_);
  return it == terms_.end() ? Coeff{} : it->second;
}

Coeff TrigPoly::evaluate(std::span<const double> point) const {
  check_freq(point);
  Coeff out{};
  for (const auto& [k, c] : terms_) {
    double phase = 0.0;
    for (int i = 0; i < dim_; ++i) phase += static_cast<double>(k[i]) * kFrequencyQuantum * point[i];
    const cplx e = std::polar(1.0, phase);
    for (int i = 0; i < components(); ++i) out[i] += c[i] * e;
  }
  return out;
}

double TrigPoly::max_frequency(int axis) const {
  double m = 0.0;
  for (const auto& [k, c] : terms_) {
    m = std::max(m, std::abs(static_cast<double>(k[axis]) * kFrequencyQuantum));
  }
  return m;
}

TrigPoly TrigPoly::operator+(const TrigPoly& other) const {
  require_same_dim(*this, other, "TrigPoly::operator+");
  if (rank_ != other.rank_) throw InputError("TrigPoly::operator+: rank mismatch");
  TrigPoly out = *this;
  for (const auto& [k, c] : other.terms_) out.add_term(other.frequency(k), c);
  return out;
}

TrigPoly TrigPoly::operator-(const TrigPoly& other) const { return *this + other * cplx(-1.0); }

TrigPoly TrigPoly::operator*(cplx s) const {
  TrigPoly out(dim_, rank_);
  for (const auto& [k, c] : terms_) {
    out.add_term(frequency(k), Coeff{c[0] * s, c[1] * s, c[2] * s});
  }
  return out;
}

TrigPoly TrigPoly::conj() const {
  TrigPoly out(dim_, rank_);
  for (const auto& [k, c] : terms_) {
    std::vector<double> f = frequency(k);
    for (double& x : f) x = -x;
    out.add_term(f, Coeff{std::conj(c[0]), std::conj(c[1]), std::conj(c[2])});
  }
  return out;
}

TrigPoly TrigPoly::component(int comp) const {
  if (rank_ == ValueRank::scalar) {
    if (comp != 0) throw InputError("TrigPoly::component: scalar polynomial has one component");
    return *this;
  }
  TrigPoly out(dim_, ValueRank::scalar);
  for (const auto& [k, c] : terms_) out.add_term(frequency(k), c[comp]);
  return out;
}

TrigPoly TrigPoly::shifted(std::span<const double> shift) const {
  check_freq(shift);
  TrigPoly out(dim_, rank_);
  for (const auto& [k, c] : terms_) {
    std::vector<double> f = frequency(k);
    for (int i = 0; i < dim_; ++i) f[i] += shift[i];
    out.add_term(f, c);
  }
  return out;
}

nlohmann::json TrigPoly::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& [k, c] : terms_) {
    nlohmann::json freq = nlohmann::json::array();
    for (double f : frequency(k)) freq.push_back(std::stod(fmt::format("{:.12g}", f)));
    nlohmann::json re = nlohmann::json::array(), im = nlohmann::json::array();
    for (int i = 0; i < components(); ++i) {
      re.push_back(c[i].real());
      im.push_back(c[i].imag());
    }
    arr.push_back({{"frequency", freq}, {"re", re}, {"im", im}});
  }
  return arr;
}

TrigPoly TrigPoly::from_json(const nlohmann::json& j, int dim) {
  if (!j.is_array()) throw InputError("TrigPoly JSON: expected an array of terms");
  std::optional<ValueRank> rank;
  std::vector<std::pair<std::vector<double>, Coeff>> parsed;
  for (const auto& term : j) {
    if (!term.contains("frequency") || !term.contains("re")) {
      throw InputError("TrigPoly JSON: each term needs 'frequency' and 're'");
    }
    auto freq = term.at("frequency").get<std::vector<double>>();
    auto re = term.at("re").get<std::vector<double>>();
    std::vector<double> im = term.contains("im") ? term.at("im").get<std::vector<double>>()
                                                 : std::vector<double>(re.size(), 0.0);
    if (static_cast<int>(freq.size()) != dim) {
      throw InputError(fmt::format("TrigPoly JSON: frequency of length {}, expected {}",
                                   freq.size(), dim));
    }
    if ((re.size() != 1 && re.size() != 3) || im.size() != re.size()) {
      throw InputError("TrigPoly JSON: coefficients must have 1 or 3 components");
    }
    const ValueRank r = re.size() == 1 ? ValueRank::scalar : ValueRank::vector3;
    if (rank && *rank != r) throw InputError("TrigPoly JSON: mixed scalar and vector terms");
    rank = r;
    Coeff c{};
    for (std::size_t i = 0; i < re.size(); ++i) c[i] = cplx(re[i], im[i]);
    parsed.emplace_back(std::move(freq), c);
  }
  TrigPoly p(dim, rank.value_or(ValueRank::scalar));
  for (const auto& [f, c] : parsed) p.add_term(f, c);
  return p;
}

TrigPoly vector_from_components(const TrigPoly& x, const TrigPoly& y, const TrigPoly& z) {
  require_same_dim(x, y, "vector_from_components");
  require_same_dim(x, z, "vector_from_components");
  TrigPoly out(x.dim(), ValueRank::vector3);
  const std::array<const TrigPoly*, 3> parts{&x, &y, &z};
  for (int c = 0; c < 3; ++c) {
    if (parts[c]->rank() != ValueRank::scalar) {
      throw InputError("vector_from_components: components must be scalar");
    }
    for (const auto& [k, v] : parts[c]->terms()) {
      Coeff coeff{};
      coeff[c] = v[0];
      out.add_term(parts[c]->frequency(k), coeff);
    }
  }
  return out;
}

TrigPoly trig_product(const TrigPoly& u, const TrigPoly& v, Contraction mode) {
  require_same_dim(u, v, "trig_product");
  const bool us = u.rank() == ValueRank::scalar;
  const bool vs = v.rank() == ValueRank::scalar;
  ValueRank out_rank;
  if (mode == Contraction::scale) {
    if (!us && !vs) {
      throw InputError("trig_product: two vector operands need a dot or cross contraction");
    }
    out_rank = (us && vs) ? ValueRank::scalar : ValueRank::vector3;
  } else {
    if (us || vs) throw InputError("trig_product: dot/cross need two vector operands");
    out_rank = mode == Contraction::dot ? ValueRank::scalar : ValueRank::vector3;
  }

  // Accumulate in a raw map first so that intermediate cancellations are not
  // pruned term by term.
  std::map<FreqKey, Coeff> acc;
  const int dim = u.dim();
  for (const auto& [ka, a] : u.terms()) {
    for (const auto& [kb, b] : v.terms()) {
      FreqKey k{0, 0, 0, 0};
      for (int i = 0; i < dim; ++i) k[i] = ka[i] + kb[i];
      Coeff c{};
      switch (mode) {
        case Contraction::scale:
          if (us && vs) {
            c[0] = a[0] * b[0];
          } else if (us) {
            for (int i = 0; i < 3; ++i) c[i] = a[0] * b[i];
          } else {
            for (int i = 0; i < 3; ++i) c[i] = a[i] * b[0];
          }
          break;
        case Contraction::dot:
          c[0] = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
          break;
        case Contraction::cross:
          c[0] = a[1] * b[2] - a[2] * b[1];
          c[1] = a[2] * b[0] - a[0] * b[2];
          c[2] = a[0] * b[1] - a[1] * b[0];
          break;
      }
      auto& slot = acc[k];
      for (int i = 0; i < 3; ++i) slot[i] += c[i];
    }
  }
  TrigPoly out(dim, out_rank);
  for (const auto& [k, c] : acc) out.add_term(out.frequency(k), c);
  return out;
}

TrigPoly apply_tensor(const std::array<TrigPoly, 9>& a, const TrigPoly& v) {
  if (v.rank() != ValueRank::vector3) throw InputError("apply_tensor: operand must be a vector");
  std::array<TrigPoly, 3> rows{TrigPoly(v.dim(), ValueRank::scalar),
                               TrigPoly(v.dim(), ValueRank::scalar),
                               TrigPoly(v.dim(), ValueRank::scalar)};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      if (a[3 * i + j].is_zero()) continue;
      rows[i] = rows[i] + trig_product(a[3 * i + j], v.component(j));
    }
  }
  return vector_from_components(rows[0], rows[1], rows[2]);
}

TrigPoly mean_value(const TrigPoly& u, std::span<const int> axes) {
  if (axes.empty()) throw InputError("mean_value: empty axis set");
  for (int a : axes) {
    if (a < 0 || a >= u.dim()) throw InputError(fmt::format("mean_value: bad axis {}", a));
  }
  TrigPoly out(u.dim(), u.rank());
  for (const auto& [k, c] : u.terms()) {
    bool keep = true;
    for (int a : axes) keep = keep && k[a] == 0;
    if (keep) out.add_term(u.frequency(k), c);
  }
  return out;
}

Coeff mean(const TrigPoly& u) {
  const std::array<double, 4> zero{};
  return u.coefficient(std::span(zero.data(), u.dim()));
}

TrigPoly partial_derivative(const TrigPoly& u, int axis) {
  if (axis < 0 || axis >= u.dim()) throw InputError("partial_derivative: bad axis");
  TrigPoly out(u.dim(), u.rank());
  for (const auto& [k, c] : u.terms()) {
    const std::vector<double> f = u.frequency(k);
    const cplx m = kI * f[axis];
    out.add_term(f, Coeff{c[0] * m, c[1] * m, c[2] * m});
  }
  return out;
}

int spatial_offset(int dim) { return dim == 4 ? 1 : 0; }
int spatial_dim(int dim) { return dim == 4 ? 3 : dim; }

TrigPoly divergence(const TrigPoly& u) {
  if (u.rank() != ValueRank::vector3) throw InputError("divergence: operand must be a vector");
  const int off = spatial_offset(u.dim());
  const int sd = spatial_dim(u.dim());
  if (sd != 3) throw InputError("divergence: needs three spatial variables");
  TrigPoly out(u.dim(), ValueRank::scalar);
  for (int c = 0; c < 3; ++c) out = out + partial_derivative(u.component(c), off + c);
  return out;
}

std::vector<double> reduced_zone_class(std::span<const double> spatial_freq) {
  std::vector<double> xi(spatial_freq.begin(), spatial_freq.end());
  for (double& x : xi) {
    x -= kTwoPi * std::floor((x + kPi) / kTwoPi);
    if (x >= kPi - 0.5 * kFrequencyQuantum) x -= kTwoPi;
    if (x < -kPi - 0.5 * kFrequencyQuantum) x += kTwoPi;
    x = quantize(x);
  }
  return xi;
}

bool in_reduced_zone(std::span<const double> xi) {
  for (double x : xi) {
    if (!(x >= -kPi - 0.5 * kFrequencyQuantum && x < kPi - 0.5 * kFrequencyQuantum)) return false;
  }
  return true;
}

TrigPoly gelfand_transform(const TrigPoly& u, std::span<const double> xi) {
  const int off = spatial_offset(u.dim());
  const int sd = spatial_dim(u.dim());
  if (static_cast<int>(xi.size()) != sd) {
    throw InputError(fmt::format("gelfand_transform: quasimomentum has {} components, expected {}",
                                 xi.size(), sd));
  }
  if (!in_reduced_zone(xi)) {
    throw InputError("gelfand_transform: quasimomentum outside the reduced zone [-pi, pi)");
  }
  TrigPoly out(u.dim(), u.rank());
  for (const auto& [k, c] : u.terms()) {
    std::vector<double> f = u.frequency(k);
    bool member = true;
    for (int i = 0; i < sd; ++i) {
      const double d = f[off + i] - xi[i];
      const double lattice = kTwoPi * std::round(d / kTwoPi);
      if (std::abs(d - lattice) > 10 * kFrequencyQuantum) {
        member = false;
        break;
      }
      f[off + i] = lattice;
    }
    if (member) out.add_term(f, c);
  }
  return out;
}

std::vector<std::vector<double>> quasimomenta(const TrigPoly& u) {
  const int off = spatial_offset(u.dim());
  const int sd = spatial_dim(u.dim());
  std::vector<std::vector<double>> classes;
  for (const auto& [k, c] : u.terms()) {
    const std::vector<double> f = u.frequency(k);
    std::vector<double> xi = reduced_zone_class(std::span(f).subspan(off, sd));
    // Representatives a few quanta apart name the same class.
    const bool known = std::any_of(classes.begin(), classes.end(), [&](const auto& other) {
      for (int i = 0; i < sd; ++i) {
        if (std::abs(other[i] - xi[i]) > 10 * kFrequencyQuantum) return false;
      }
      return true;
    });
    if (!known) classes.push_back(std::move(xi));
  }
  std::sort(classes.begin(), classes.end());
  return classes;
}

bool is_lattice_periodic(const TrigPoly& u) {
  const int off = spatial_offset(u.dim());
  const int sd = spatial_dim(u.dim());
  for (const auto& [k, c] : u.terms()) {
    const std::vector<double> f = u.frequency(k);
    for (int i = 0; i < sd; ++i) {
      const double d = f[off + i];
      if (std::abs(d - kTwoPi * std::round(d / kTwoPi)) > 10 * kFrequencyQuantum) return false;
    }
  }
  return true;
}

cplx besicovitch_inner(const TrigPoly& u, const TrigPoly& v, int weight_m) {
  require_same_dim(u, v, "besicovitch_inner");
  if (u.rank() != v.rank()) throw InputError("besicovitch_inner: rank mismatch");
  cplx sum = 0.0;
  for (const auto& [k, a] : u.terms()) {
    auto it = find_near(v.terms(), k, u.dim());
    if (it == v.terms().end()) continue;
    double norm2 = 0.0;
    for (double f : u.frequency(k)) norm2 += f * f;
    const double nf = std::sqrt(norm2);
    double w = 1.0;
    if (weight_m > 0) {
      w = std::pow(1.0 + nf, 2 * weight_m);
    } else if (weight_m < 0) {
      if (k == FreqKey{0, 0, 0, 0}) continue;
      w = std::pow(nf, 2 * weight_m);
    }
    cplx term = 0.0;
    for (int i = 0; i < u.components(); ++i) term += a[i] * std::conj(it->second[i]);
    sum += w * term;
  }
  return sum;
}

bool approx_equal(const TrigPoly& u, const TrigPoly& v, double tol) {
  if (u.dim() != v.dim() || u.rank() != v.rank()) return false;
  // Keys may differ by one quantum when a frequency sits on a rounding boundary.
  // Keys within 100 quanta (1e-10) match: products and 12-digit JSON
  // frequencies may shift a key by a few quanta.
  auto near = [&](const FreqKey& a, const FreqKey& b) {
    for (int i = 0; i < u.dim(); ++i) {
      if (std::llabs(a[i] - b[i]) > 100) return false;
    }
    return true;
  };
  auto covered = [&](const TrigPoly& p, const TrigPoly& q) {
    for (const auto& [k, a] : p.terms()) {
      Coeff other{};
      for (const auto& [k2, b] : q.terms()) {
        if (near(k, k2)) {
          for (int i = 0; i < 3; ++i) other[i] += b[i];
        }
      }
      for (int i = 0; i < p.components(); ++i) {
        if (std::abs(a[i] - other[i]) > tol) return false;
      }
    }
    return true;
  };
  return covered(u, v) && covered(v, u);
}

}  // namespace hommax
