#include <algorithm>
#include <cmath>
#include <string>

#include "subdetector/errors.hpp"
#include "subdetector/gradcore/ops.hpp"

namespace subdetector::grad {
namespace {

Tape& tape_of(Var a, Var b, const char* op) {
  if (!a.valid() || !b.valid() || a.tape() != b.tape()) {
    throw ContractViolation(std::string(op) + ": operands live on different tapes");
  }
  return *a.tape();
}

// Strided view of a broadcast binary op: out axis k walks a with stride sa[k]
// and b with stride sb[k]; a stride of 0 marks a broadcast axis.
struct Broadcast {
  Shape out;
  std::vector<std::size_t> sa, sb;
  enum class Kind { Same, ScalarB, ScalarA, General } kind = Kind::General;
};

Broadcast make_broadcast(const Shape& a, const Shape& b, const char* op) {
  Broadcast bc;
  if (a == b) {
    bc.out = a;
    bc.kind = Broadcast::Kind::Same;
    return bc;
  }
  const std::size_t r = std::max(a.size(), b.size());
  Shape pa(r - a.size(), 1), pb(r - b.size(), 1);
  pa.insert(pa.end(), a.begin(), a.end());
  pb.insert(pb.end(), b.begin(), b.end());
  bc.out.resize(r);
  for (std::size_t k = 0; k < r; ++k) {
    if (pa[k] != pb[k] && pa[k] != 1 && pb[k] != 1) {
      throw DimensionError(std::string(op) + ": cannot broadcast " + shape_string(a) + " with " + shape_string(b));
    }
    bc.out[k] = std::max(pa[k], pb[k]);
  }
  bc.sa.assign(r, 0);
  bc.sb.assign(r, 0);
  std::size_t ra = 1, rb = 1;
  for (std::size_t k = r; k-- > 0;) {
    bc.sa[k] = pa[k] == 1 ? 0 : ra;
    bc.sb[k] = pb[k] == 1 ? 0 : rb;
    ra *= pa[k];
    rb *= pb[k];
  }
  if (shape_size(b) == 1) bc.kind = Broadcast::Kind::ScalarB;
  else if (shape_size(a) == 1) bc.kind = Broadcast::Kind::ScalarA;
  return bc;
}

// Calls f(out_index, a_index, b_index) for every output element.
template <class F>
void for_each(const Broadcast& bc, F&& f) {
  const std::size_t n = shape_size(bc.out);
  switch (bc.kind) {
    case Broadcast::Kind::Same:
      for (std::size_t i = 0; i < n; ++i) f(i, i, i);
      return;
    case Broadcast::Kind::ScalarB:
      for (std::size_t i = 0; i < n; ++i) f(i, i, std::size_t{0});
      return;
    case Broadcast::Kind::ScalarA:
      for (std::size_t i = 0; i < n; ++i) f(i, std::size_t{0}, i);
      return;
    case Broadcast::Kind::General:
      break;
  }
  const std::size_t r = bc.out.size();
  std::vector<std::size_t> idx(r, 0);
  std::size_t ia = 0, ib = 0;
  const std::size_t last = bc.out[r - 1];
  const std::size_t la = bc.sa[r - 1], lb = bc.sb[r - 1];
  for (std::size_t i = 0; i < n;) {
    for (std::size_t t = 0; t < last; ++t, ++i) f(i, ia + t * la, ib + t * lb);
    // Carry into the outer axes.
    for (std::size_t k = r - 1; k-- > 0;) {
      ++idx[k];
      ia += bc.sa[k];
      ib += bc.sb[k];
      if (idx[k] < bc.out[k]) break;
      ia -= bc.sa[k] * idx[k];
      ib -= bc.sb[k] * idx[k];
      idx[k] = 0;
    }
  }
}

enum class BinOp { Add, Sub, Mul, Div };

Var binary(Var a, Var b, BinOp op, const char* name) {
  Tape& tape = tape_of(a, b, name);
  const DenseArray& av = a.value();
  const DenseArray& bv = b.value();
  Broadcast bc = make_broadcast(av.shape(), bv.shape(), name);
  DenseArray out = DenseArray::uninitialized(bc.out);
  double* o = out.data().data();
  const double* pa = av.data().data();
  const double* pb = bv.data().data();
  switch (op) {
    case BinOp::Add: for_each(bc, [&](std::size_t i, std::size_t x, std::size_t y) { o[i] = pa[x] + pb[y]; }); break;
    case BinOp::Sub: for_each(bc, [&](std::size_t i, std::size_t x, std::size_t y) { o[i] = pa[x] - pb[y]; }); break;
    case BinOp::Mul: for_each(bc, [&](std::size_t i, std::size_t x, std::size_t y) { o[i] = pa[x] * pb[y]; }); break;
    case BinOp::Div: for_each(bc, [&](std::size_t i, std::size_t x, std::size_t y) { o[i] = pa[x] / pb[y]; }); break;
  }
  const std::size_t ia = a.id(), ib = b.id();
  return tape.record(std::move(out), {a, b}, [ia, ib, op, bc = std::move(bc)](Tape& t, std::size_t self) {
    const double* g = t.upstream(self).data().data();
    const double* pa = t.value(ia).data().data();
    const double* pb = t.value(ib).data().data();
    if (t.requires_grad(ia)) {
      double* ga = t.accumulator(ia).data().data();
      switch (op) {
        case BinOp::Add:
        case BinOp::Sub: for_each(bc, [&](std::size_t i, std::size_t x, std::size_t) { ga[x] += g[i]; }); break;
        case BinOp::Mul: for_each(bc, [&](std::size_t i, std::size_t x, std::size_t y) { ga[x] += g[i] * pb[y]; }); break;
        case BinOp::Div: for_each(bc, [&](std::size_t i, std::size_t x, std::size_t y) { ga[x] += g[i] / pb[y]; }); break;
      }
    }
    if (t.requires_grad(ib)) {
      double* gb = t.accumulator(ib).data().data();
      switch (op) {
        case BinOp::Add: for_each(bc, [&](std::size_t i, std::size_t, std::size_t y) { gb[y] += g[i]; }); break;
        case BinOp::Sub: for_each(bc, [&](std::size_t i, std::size_t, std::size_t y) { gb[y] -= g[i]; }); break;
        case BinOp::Mul: for_each(bc, [&](std::size_t i, std::size_t x, std::size_t y) { gb[y] += g[i] * pa[x]; }); break;
        case BinOp::Div:
          for_each(bc, [&](std::size_t i, std::size_t x, std::size_t y) { gb[y] -= g[i] * pa[x] / (pb[y] * pb[y]); });
          break;
      }
    }
  });
}

// y = f(x) elementwise; dfdx(x, y) gives the local derivative.
template <class F, class D>
Var unary(Var x, F f, D dfdx) {
  Tape& tape = *x.tape();
  const DenseArray& xv = x.value();
  DenseArray out = DenseArray::uninitialized(xv.shape());
  const double* px = xv.data().data();
  double* o = out.data().data();
  for (std::size_t i = 0; i < out.size(); ++i) o[i] = f(px[i]);
  const std::size_t ix = x.id();
  return tape.record(std::move(out), {x}, [ix, dfdx](Tape& t, std::size_t self) {
    const double* g = t.upstream(self).data().data();
    const double* px = t.value(ix).data().data();
    const double* py = t.value(self).data().data();
    bool fresh;
    double* gx = t.accumulator(ix, fresh).data().data();
    const std::size_t n = t.value(self).size();
    if (fresh) {
      for (std::size_t i = 0; i < n; ++i) gx[i] = g[i] * dfdx(px[i], py[i]);
    } else {
      for (std::size_t i = 0; i < n; ++i) gx[i] += g[i] * dfdx(px[i], py[i]);
    }
  });
}

Var scalar_const(Var like, double c) { return like.tape()->constant(c); }

}  // namespace

Var add(Var a, Var b) { return binary(a, b, BinOp::Add, "add"); }
Var sub(Var a, Var b) { return binary(a, b, BinOp::Sub, "sub"); }
Var mul(Var a, Var b) { return binary(a, b, BinOp::Mul, "mul"); }
Var div(Var a, Var b) { return binary(a, b, BinOp::Div, "div"); }

Var operator+(Var a, Var b) { return add(a, b); }
Var operator-(Var a, Var b) { return sub(a, b); }
Var operator*(Var a, Var b) { return mul(a, b); }
Var operator/(Var a, Var b) { return div(a, b); }
Var operator+(Var a, double c) { return add(a, scalar_const(a, c)); }
Var operator-(Var a, double c) { return sub(a, scalar_const(a, c)); }
Var operator*(Var a, double c) { return mul(a, scalar_const(a, c)); }
Var operator/(Var a, double c) { return div(a, scalar_const(a, c)); }
Var operator+(double c, Var a) { return add(scalar_const(a, c), a); }
Var operator-(double c, Var a) { return sub(scalar_const(a, c), a); }
Var operator*(double c, Var a) { return mul(scalar_const(a, c), a); }
Var operator-(Var a) {
  return unary(a, [](double x) { return -x; }, [](double, double) { return -1.0; });
}

Var exp(Var x) {
  return unary(x, [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

Var log(Var x) {
  return unary(x, [](double v) { return std::log(v); }, [](double v, double) { return 1.0 / v; });
}

Var sqrt(Var x) {
  return unary(x, [](double v) { return std::sqrt(v); }, [](double, double y) { return 0.5 / y; });
}

Var square(Var x) {
  return unary(x, [](double v) { return v * v; }, [](double v, double) { return 2.0 * v; });
}

Var relu(Var x) {
  return unary(x, [](double v) { return v > 0.0 ? v : 0.0; }, [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Var softplus(Var x) {
  return unary(
      x, [](double v) { return std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v))); },
      [](double v, double) {
        // logistic sigmoid, evaluated without overflow
        if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
      });
}

Var clamp_max(Var x, double ceiling) {
  return unary(
      x, [ceiling](double v) { return std::min(v, ceiling); },
      [ceiling](double v, double) { return v < ceiling ? 1.0 : 0.0; });
}

}  // namespace subdetector::grad
