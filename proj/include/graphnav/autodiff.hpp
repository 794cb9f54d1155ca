#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "graphnav/common.hpp"
#include "graphnav/tensor.hpp"

namespace graphnav {

// Named learnable parameters with gradient accumulators. Iteration order is the
// (sorted) name order, so optimizer sweeps and checkpoints are deterministic.
class ParameterStore {
  public:
    struct Entry {
        Tensor value;
        Tensor grad;
        int fan_in = 0;
    };

    explicit ParameterStore(uint64_t seed = 0) : seed_(seed) {}

    // Fetches a parameter, creating it on first use. New matrices/vectors are
    // initialized uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)] from a stream
    // seeded by (store seed, name), so values do not depend on creation order.
    Entry& get_or_create(const std::string& name, std::vector<int> shape, int fan_in) {
        auto it = entries_.find(name);
        if (it != entries_.end()) {
            require(it->second.value.shape == shape,
                    "parameter '" + name + "': requested shape " + shape_string(shape) +
                        " does not match stored shape " + shape_string(it->second.value.shape));
            return it->second;
        }
        require(fan_in > 0, "parameter '" + name + "': fan_in must be positive");
        Entry e;
        e.value = Tensor::zeros(shape);
        e.grad = Tensor::zeros(shape);
        e.fan_in = fan_in;
        std::mt19937_64 rng(mix_seed({seed_, fnv1a64(name)}));
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (double& v : e.value.data) v = uniform(rng, -bound, bound);
        return entries_.emplace(name, std::move(e)).first->second;
    }

    bool contains(const std::string& name) const { return entries_.count(name) != 0; }

    Entry& at(const std::string& name) {
        auto it = entries_.find(name);
        require(it != entries_.end(), "parameter '" + name + "' does not exist");
        return it->second;
    }
    const Entry& at(const std::string& name) const {
        auto it = entries_.find(name);
        require(it != entries_.end(), "parameter '" + name + "' does not exist");
        return it->second;
    }

    void zero_grads() {
        for (auto& [name, e] : entries_)
            std::fill(e.grad.data.begin(), e.grad.data.end(), 0.0);
    }

    int64_t total_elements() const {
        int64_t n = 0;
        for (const auto& [name, e] : entries_) n += e.value.size();
        return n;
    }

    uint64_t seed() const { return seed_; }
    auto begin() { return entries_.begin(); }
    auto end() { return entries_.end(); }
    auto begin() const { return entries_.begin(); }
    auto end() const { return entries_.end(); }
    size_t size() const { return entries_.size(); }

  private:
    uint64_t seed_;
    std::map<std::string, Entry> entries_;
};

// Handle to a node on a Graph tape.
struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
};

// Reverse-mode autodiff tape over rank-1/2 tensors. Single-threaded; one tape
// per episode. Values and gradients live in flat arenas reused across resets.
class Graph {
    enum class Op : uint8_t {
        Const, Param,
        Add, Sub, Mul, Scale, AddScalar,
        Tanh, Sigmoid, Log,
        MatVec,      // [m,n] x [n] -> [m]
        MatVecT,     // [m,n] x [m] -> [n]   (M^T x)
        RowsLinear,  // [n,din] x W[dout,din] -> [n,dout]  (A W^T)
        ConcatCols,  // [n,a] ++ [n,b] -> [n,a+b]
        MulBcast,    // [n,d] * [d] -> [n,d]  (row-wise gate)
        Dot, Sum, Pick, Slice,
        Concat, Mean, StackRows,
        Softmax, SoftmaxMasked,
    };

    struct Node {
        Op op;
        int a = -1, b = -1;
        int aux_off = 0, aux_n = 0;  // n-ary parents
        int iarg = 0;                // op-specific int (slice offset, pick index, valid length)
        double k = 0.0;              // op-specific scalar
        int off = 0, len = 0;        // slice of the value/grad arenas
        int rank = 1, d0 = 0, d1 = 0;
        ParameterStore::Entry* pe = nullptr;
    };

  public:
    Graph() = default;

    void reset() {
        nodes_.clear();
        vals_.clear();
        grads_.clear();
        aux_.clear();
        param_cache_.clear();
        finalized_ = false;
    }

    size_t node_count() const { return nodes_.size(); }

    // ---- leaves ----

    Var constant(const Tensor& t) {
        Node& n = fresh(Op::Const, t.rank(), t.rows(), t.rank() == 2 ? t.cols() : 0);
        std::copy(t.data.begin(), t.data.end(), vals_.begin() + n.off);
        return last();
    }

    Var constant(std::span<const double> v) {
        Node& n = fresh(Op::Const, 1, static_cast<int>(v.size()), 0);
        std::copy(v.begin(), v.end(), vals_.begin() + n.off);
        return last();
    }

    Var scalar(double v) {
        Node& n = fresh(Op::Const, 1, 1, 0);
        vals_[static_cast<size_t>(n.off)] = v;
        return last();
    }

    Var zeros(int len) {
        Node& n = fresh(Op::Const, 1, len, 0);
        std::fill_n(vals_.begin() + n.off, len, 0.0);
        return last();
    }

    // One tape node per parameter entry; repeated use of the same name returns
    // the same node, so shared weights accumulate gradients additively.
    Var param(ParameterStore& ps, const std::string& name, std::vector<int> shape, int fan_in) {
        ParameterStore::Entry& e = ps.get_or_create(name, std::move(shape), fan_in);
        auto it = param_cache_.find(&e);
        if (it != param_cache_.end()) return Var{it->second};
        const Tensor& t = e.value;
        Node& n = fresh(Op::Param, t.rank(), t.rows(), t.rank() == 2 ? t.cols() : 0);
        std::copy(t.data.begin(), t.data.end(), vals_.begin() + n.off);
        n.pe = &e;
        param_cache_.emplace(&e, last().id);
        return last();
    }

    // ---- elementwise / structural ----

    Var add(Var a, Var b) { return binary(Op::Add, a, b); }
    Var sub(Var a, Var b) { return binary(Op::Sub, a, b); }
    Var mul(Var a, Var b) { return binary(Op::Mul, a, b); }

    Var scale(Var a, double c) {
        const Node na = node(a);
        Node& n = fresh(Op::Scale, na.rank, na.d0, na.d1);
        n.a = a.id;
        n.k = c;
        const double* x = vals_.data() + na.off;
        double* y = vals_.data() + n.off;
        for (int i = 0; i < n.len; ++i) y[i] = c * x[i];
        return last();
    }

    // Broadcast-adds a scalar node over every element of x.
    Var add_scalar(Var x, Var s) {
        const Node nx = node(x);
        require(node(s).len == 1, "add_scalar: second argument must be a scalar");
        Node& n = fresh(Op::AddScalar, nx.rank, nx.d0, nx.d1);
        n.a = x.id;
        n.b = s.id;
        const double sv = vals_[static_cast<size_t>(node(s).off)];
        const double* xv = vals_.data() + nx.off;
        double* y = vals_.data() + n.off;
        for (int i = 0; i < n.len; ++i) y[i] = xv[i] + sv;
        return last();
    }

    Var tanh(Var a) { return unary(Op::Tanh, a, [](double v) { return std::tanh(v); }); }
    Var sigmoid(Var a) {
        return unary(Op::Sigmoid, a, [](double v) { return 1.0 / (1.0 + std::exp(-v)); });
    }
    Var log(Var a) { return unary(Op::Log, a, [](double v) { return std::log(v); }); }

    Var concat(std::span<const Var> parts) {
        require(!parts.empty(), "concat: no inputs");
        int total = 0;
        for (Var p : parts) {
            require(node(p).rank == 1, "concat: rank-1 inputs only");
            total += node(p).len;
        }
        const int aux0 = push_aux(parts);
        Node& n = fresh(Op::Concat, 1, total, 0);
        n.aux_off = aux0;
        n.aux_n = static_cast<int>(parts.size());
        double* y = vals_.data() + n.off;
        for (Var p : parts) {
            const Node np = node(p);
            std::copy_n(vals_.data() + np.off, np.len, y);
            y += np.len;
        }
        return last();
    }

    Var concat(std::initializer_list<Var> parts) {
        return concat(std::span<const Var>(parts.begin(), parts.size()));
    }

    Var slice(Var x, int offset, int len) {
        const Node nx = node(x);
        require(offset >= 0 && len > 0 && offset + len <= nx.len, "slice: out of range");
        Node& n = fresh(Op::Slice, 1, len, 0);
        n.a = x.id;
        n.iarg = offset;
        std::copy_n(vals_.data() + nx.off + offset, len, vals_.data() + n.off);
        return last();
    }

    // Extracts row r of a rank-2 node as a vector.
    Var row(Var m, int r) {
        const Node nm = node(m);
        require(nm.rank == 2, "row: rank-2 input required");
        require(r >= 0 && r < nm.d0, "row: index out of range");
        return slice(m, r * nm.d1, nm.d1);
    }

    Var mean(std::span<const Var> parts) {
        require(!parts.empty(), "mean: no inputs");
        const Node n0 = node(parts.front());
        for (Var p : parts)
            require(node(p).len == n0.len && node(p).rank == n0.rank, "mean: shape mismatch");
        const int aux0 = push_aux(parts);
        Node& n = fresh(Op::Mean, n0.rank, n0.d0, n0.d1);
        n.aux_off = aux0;
        n.aux_n = static_cast<int>(parts.size());
        double* y = vals_.data() + n.off;
        std::fill_n(y, n.len, 0.0);
        for (Var p : parts) {
            const double* x = vals_.data() + node(p).off;
            for (int i = 0; i < n.len; ++i) y[i] += x[i];
        }
        const double inv = 1.0 / static_cast<double>(parts.size());
        for (int i = 0; i < n.len; ++i) y[i] *= inv;
        return last();
    }

    Var mean(std::initializer_list<Var> parts) {
        return mean(std::span<const Var>(parts.begin(), parts.size()));
    }

    Var stack_rows(std::span<const Var> rows) {
        require(!rows.empty(), "stack_rows: no inputs");
        const int d = node(rows.front()).len;
        for (Var r : rows)
            require(node(r).rank == 1 && node(r).len == d, "stack_rows: row length mismatch");
        const int aux0 = push_aux(rows);
        Node& n = fresh(Op::StackRows, 2, static_cast<int>(rows.size()), d);
        n.aux_off = aux0;
        n.aux_n = static_cast<int>(rows.size());
        double* y = vals_.data() + n.off;
        for (Var r : rows) {
            std::copy_n(vals_.data() + node(r).off, d, y);
            y += d;
        }
        return last();
    }

    Var stack_rows(std::initializer_list<Var> rows) {
        return stack_rows(std::span<const Var>(rows.begin(), rows.size()));
    }

    // ---- linear algebra ----

    Var matvec(Var m, Var x) {
        const Node nm = node(m);
        const Node nx = node(x);
        require(nm.rank == 2, "matvec: first argument must be rank-2");
        require(nx.rank == 1 && nx.len == nm.d1,
                "matvec: vector length " + std::to_string(nx.len) + " does not match matrix cols " +
                    std::to_string(nm.d1));
        Node& n = fresh(Op::MatVec, 1, nm.d0, 0);
        n.a = m.id;
        n.b = x.id;
        const double* M = vals_.data() + nm.off;
        const double* X = vals_.data() + nx.off;
        double* y = vals_.data() + n.off;
        for (int r = 0; r < nm.d0; ++r) {
            double acc = 0.0;
            const double* mr = M + static_cast<size_t>(r) * nm.d1;
            for (int c = 0; c < nm.d1; ++c) acc += mr[c] * X[c];
            y[r] = acc;
        }
        return last();
    }

    Var matvec_t(Var m, Var x) {
        const Node nm = node(m);
        const Node nx = node(x);
        require(nm.rank == 2, "matvec_t: first argument must be rank-2");
        require(nx.rank == 1 && nx.len == nm.d0,
                "matvec_t: vector length " + std::to_string(nx.len) + " does not match matrix rows " +
                    std::to_string(nm.d0));
        Node& n = fresh(Op::MatVecT, 1, nm.d1, 0);
        n.a = m.id;
        n.b = x.id;
        const double* M = vals_.data() + nm.off;
        const double* X = vals_.data() + nx.off;
        double* y = vals_.data() + n.off;
        std::fill_n(y, nm.d1, 0.0);
        for (int r = 0; r < nm.d0; ++r) {
            const double* mr = M + static_cast<size_t>(r) * nm.d1;
            const double xr = X[r];
            for (int c = 0; c < nm.d1; ++c) y[c] += mr[c] * xr;
        }
        return last();
    }

    // A [n,din] times W^T for W [dout,din]; the batched form of matvec over rows.
    Var rows_linear(Var a, Var w) {
        const Node na = node(a);
        const Node nw = node(w);
        require(na.rank == 2 && nw.rank == 2, "rows_linear: rank-2 inputs required");
        require(na.d1 == nw.d1, "rows_linear: inner dims disagree (" + std::to_string(na.d1) +
                                    " vs " + std::to_string(nw.d1) + ")");
        Node& n = fresh(Op::RowsLinear, 2, na.d0, nw.d0);
        n.a = a.id;
        n.b = w.id;
        const double* A = vals_.data() + na.off;
        const double* W = vals_.data() + nw.off;
        double* Y = vals_.data() + n.off;
        for (int r = 0; r < na.d0; ++r) {
            const double* ar = A + static_cast<size_t>(r) * na.d1;
            double* yr = Y + static_cast<size_t>(r) * nw.d0;
            for (int o = 0; o < nw.d0; ++o) {
                const double* wo = W + static_cast<size_t>(o) * nw.d1;
                double acc = 0.0;
                for (int c = 0; c < na.d1; ++c) acc += ar[c] * wo[c];
                yr[o] = acc;
            }
        }
        return last();
    }

    Var concat_cols(Var a, Var b) {
        const Node na = node(a);
        const Node nb = node(b);
        require(na.rank == 2 && nb.rank == 2 && na.d0 == nb.d0, "concat_cols: row counts disagree");
        Node& n = fresh(Op::ConcatCols, 2, na.d0, na.d1 + nb.d1);
        n.a = a.id;
        n.b = b.id;
        const double* A = vals_.data() + na.off;
        const double* B = vals_.data() + nb.off;
        double* Y = vals_.data() + n.off;
        for (int r = 0; r < na.d0; ++r) {
            std::copy_n(A + static_cast<size_t>(r) * na.d1, na.d1, Y);
            Y += na.d1;
            std::copy_n(B + static_cast<size_t>(r) * nb.d1, nb.d1, Y);
            Y += nb.d1;
        }
        return last();
    }

    // Gates every row of A [n,d] elementwise by v [d].
    Var mul_bcast(Var a, Var v) {
        const Node na = node(a);
        const Node nv = node(v);
        require(na.rank == 2 && nv.rank == 1 && nv.len == na.d1,
                "mul_bcast: gate length does not match row width");
        Node& n = fresh(Op::MulBcast, 2, na.d0, na.d1);
        n.a = a.id;
        n.b = v.id;
        const double* A = vals_.data() + na.off;
        const double* V = vals_.data() + nv.off;
        double* Y = vals_.data() + n.off;
        for (int r = 0; r < na.d0; ++r)
            for (int c = 0; c < na.d1; ++c) Y[static_cast<size_t>(r) * na.d1 + c] = A[static_cast<size_t>(r) * na.d1 + c] * V[c];
        return last();
    }

    Var dot(Var a, Var b) {
        const Node na = node(a);
        const Node nb = node(b);
        require(na.len == nb.len, "dot: length mismatch");
        Node& n = fresh(Op::Dot, 1, 1, 0);
        n.a = a.id;
        n.b = b.id;
        const double* A = vals_.data() + na.off;
        const double* B = vals_.data() + nb.off;
        double acc = 0.0;
        for (int i = 0; i < na.len; ++i) acc += A[i] * B[i];
        vals_[static_cast<size_t>(n.off)] = acc;
        return last();
    }

    Var sum(Var x) {
        const Node nx = node(x);
        Node& n = fresh(Op::Sum, 1, 1, 0);
        n.a = x.id;
        const double* X = vals_.data() + nx.off;
        double acc = 0.0;
        for (int i = 0; i < nx.len; ++i) acc += X[i];
        vals_[static_cast<size_t>(n.off)] = acc;
        return last();
    }

    Var pick(Var x, int index) {
        const Node nx = node(x);
        require(index >= 0 && index < nx.len, "pick: index out of range");
        Node& n = fresh(Op::Pick, 1, 1, 0);
        n.a = x.id;
        n.iarg = index;
        vals_[static_cast<size_t>(n.off)] = vals_[static_cast<size_t>(nx.off + index)];
        return last();
    }

    // ---- softmax ----

    Var softmax(Var x) {
        const Node nx = node(x);
        require(nx.rank == 1 && nx.len >= 1, "softmax: nonempty vector required");
        Node& n = fresh(Op::Softmax, 1, nx.len, 0);
        n.a = x.id;
        softmax_fill(vals_.data() + node(x.id).off, vals_.data() + n.off, nx.len);
        return last();
    }

    // Softmax over the first n_valid entries; trailing (padded) entries get
    // exactly zero weight.
    Var softmax_masked(Var x, int n_valid) {
        const Node nx = node(x);
        require(nx.rank == 1, "softmax_masked: vector required");
        require(n_valid >= 1 && n_valid <= nx.len, "softmax_masked: invalid valid-length");
        Node& n = fresh(Op::SoftmaxMasked, 1, nx.len, 0);
        n.a = x.id;
        n.iarg = n_valid;
        double* y = vals_.data() + n.off;
        softmax_fill(vals_.data() + node(x.id).off, y, n_valid);
        std::fill(y + n_valid, y + nx.len, 0.0);
        return last();
    }

    // ---- access ----

    std::span<const double> val(Var v) const {
        const Node& n = node(v);
        return {vals_.data() + n.off, static_cast<size_t>(n.len)};
    }

    double val0(Var v) const { return val(v)[0]; }

    std::span<const double> grad(Var v) const {
        require(finalized_, "grad: backward() has not run");
        const Node& n = node(v);
        return {grads_.data() + n.off, static_cast<size_t>(n.len)};
    }

    Tensor val_tensor(Var v) const {
        const Node& n = node(v);
        std::vector<int> shape = n.rank == 2 ? std::vector<int>{n.d0, n.d1} : std::vector<int>{n.d0};
        auto s = val(v);
        return Tensor(shape, std::vector<double>(s.begin(), s.end()));
    }

    int length(Var v) const { return node(v).len; }
    int rows_of(Var v) const { return node(v).d0; }
    int cols_of(Var v) const { return node(v).rank == 2 ? node(v).d1 : 1; }

    // ---- backward ----

    // Accumulates dLoss/dParam into the store entries of every parameter used
    // on this tape. The tape is finalized afterwards: node values and gradients
    // stay readable, but no further ops may be recorded until reset().
    void backward(Var loss) {
        require(!finalized_, "backward: tape already finalized");
        require(node(loss).len == 1, "backward: loss must be a scalar");
        grads_.assign(vals_.size(), 0.0);
        grads_[static_cast<size_t>(node(loss).off)] = 1.0;
        for (int id = static_cast<int>(nodes_.size()) - 1; id >= 0; --id) backprop(nodes_[static_cast<size_t>(id)]);
        finalized_ = true;
    }

  private:
    std::vector<Node> nodes_;
    std::vector<double> vals_;
    std::vector<double> grads_;
    std::vector<int> aux_;
    std::unordered_map<const ParameterStore::Entry*, int> param_cache_;
    bool finalized_ = false;

    const Node& node(Var v) const {
        require(v.valid() && v.id < static_cast<int>(nodes_.size()), "invalid Var");
        return nodes_[static_cast<size_t>(v.id)];
    }
    const Node& node(int id) const { return nodes_[static_cast<size_t>(id)]; }

    Var last() const { return Var{static_cast<int>(nodes_.size()) - 1}; }

    Node& fresh(Op op, int rank, int d0, int d1) {
        require(!finalized_, "graph: tape finalized; reset() before recording new ops");
        Node n;
        n.op = op;
        n.rank = rank;
        n.d0 = d0;
        n.d1 = d1;
        n.len = rank == 2 ? d0 * d1 : d0;
        require(n.len > 0, "graph: empty tensor");
        n.off = static_cast<int>(vals_.size());
        vals_.resize(vals_.size() + static_cast<size_t>(n.len));
        nodes_.push_back(n);
        return nodes_.back();
    }

    int push_aux(std::span<const Var> vs) {
        const int off = static_cast<int>(aux_.size());
        for (Var v : vs) aux_.push_back(v.id);
        return off;
    }

    Var binary(Op op, Var a, Var b) {
        const Node na = node(a);
        const Node nb = node(b);
        require(na.len == nb.len && na.rank == nb.rank,
                "elementwise op: shape mismatch (" + std::to_string(na.len) + " vs " +
                    std::to_string(nb.len) + ")");
        Node& n = fresh(op, na.rank, na.d0, na.d1);
        n.a = a.id;
        n.b = b.id;
        const double* A = vals_.data() + node(a.id).off;
        const double* B = vals_.data() + node(b.id).off;
        double* Y = vals_.data() + n.off;
        switch (op) {
            case Op::Add:
                for (int i = 0; i < n.len; ++i) Y[i] = A[i] + B[i];
                break;
            case Op::Sub:
                for (int i = 0; i < n.len; ++i) Y[i] = A[i] - B[i];
                break;
            case Op::Mul:
                for (int i = 0; i < n.len; ++i) Y[i] = A[i] * B[i];
                break;
            default:
                require(false, "binary: bad op");
        }
        return last();
    }

    template <typename F>
    Var unary(Op op, Var a, F f) {
        const Node na = node(a);
        Node& n = fresh(op, na.rank, na.d0, na.d1);
        n.a = a.id;
        const double* A = vals_.data() + node(a.id).off;
        double* Y = vals_.data() + n.off;
        for (int i = 0; i < n.len; ++i) Y[i] = f(A[i]);
        return last();
    }

    static void softmax_fill(const double* x, double* y, int n) {
        double mx = x[0];
        for (int i = 1; i < n; ++i) mx = std::max(mx, x[i]);
        double z = 0.0;
        for (int i = 0; i < n; ++i) {
            y[i] = std::exp(x[i] - mx);
            z += y[i];
        }
        const double inv = 1.0 / z;
        for (int i = 0; i < n; ++i) y[i] *= inv;
    }

    void backprop(const Node& n) {
        const double* g = grads_.data() + n.off;
        switch (n.op) {
            case Op::Const:
                break;
            case Op::Param: {
                double* pg = n.pe->grad.data.data();
                for (int i = 0; i < n.len; ++i) pg[i] += g[i];
                break;
            }
            case Op::Add: {
                acc(n.a, g, n.len, +1.0);
                acc(n.b, g, n.len, +1.0);
                break;
            }
            case Op::Sub: {
                acc(n.a, g, n.len, +1.0);
                acc(n.b, g, n.len, -1.0);
                break;
            }
            case Op::Mul: {
                const double* A = vals_.data() + node(n.a).off;
                const double* B = vals_.data() + node(n.b).off;
                double* ga = grads_.data() + node(n.a).off;
                double* gb = grads_.data() + node(n.b).off;
                for (int i = 0; i < n.len; ++i) {
                    ga[i] += g[i] * B[i];
                    gb[i] += g[i] * A[i];
                }
                break;
            }
            case Op::Scale:
                acc(n.a, g, n.len, n.k);
                break;
            case Op::AddScalar: {
                acc(n.a, g, n.len, 1.0);
                double acc_s = 0.0;
                for (int i = 0; i < n.len; ++i) acc_s += g[i];
                grads_[static_cast<size_t>(node(n.b).off)] += acc_s;
                break;
            }
            case Op::Tanh: {
                const double* Y = vals_.data() + n.off;
                double* ga = grads_.data() + node(n.a).off;
                for (int i = 0; i < n.len; ++i) ga[i] += g[i] * (1.0 - Y[i] * Y[i]);
                break;
            }
            case Op::Sigmoid: {
                const double* Y = vals_.data() + n.off;
                double* ga = grads_.data() + node(n.a).off;
                for (int i = 0; i < n.len; ++i) ga[i] += g[i] * Y[i] * (1.0 - Y[i]);
                break;
            }
            case Op::Log: {
                const double* X = vals_.data() + node(n.a).off;
                double* ga = grads_.data() + node(n.a).off;
                for (int i = 0; i < n.len; ++i) ga[i] += g[i] / X[i];
                break;
            }
            case Op::MatVec: {
                const Node& nm = node(n.a);
                const Node& nx = node(n.b);
                const double* M = vals_.data() + nm.off;
                const double* X = vals_.data() + nx.off;
                double* gm = grads_.data() + nm.off;
                double* gx = grads_.data() + nx.off;
                for (int r = 0; r < nm.d0; ++r) {
                    const double gr = g[r];
                    const double* mr = M + static_cast<size_t>(r) * nm.d1;
                    double* gmr = gm + static_cast<size_t>(r) * nm.d1;
                    for (int c = 0; c < nm.d1; ++c) {
                        gmr[c] += gr * X[c];
                        gx[c] += gr * mr[c];
                    }
                }
                break;
            }
            case Op::MatVecT: {
                const Node& nm = node(n.a);
                const Node& nx = node(n.b);
                const double* M = vals_.data() + nm.off;
                const double* X = vals_.data() + nx.off;
                double* gm = grads_.data() + nm.off;
                double* gx = grads_.data() + nx.off;
                for (int r = 0; r < nm.d0; ++r) {
                    const double xr = X[r];
                    const double* mr = M + static_cast<size_t>(r) * nm.d1;
                    double* gmr = gm + static_cast<size_t>(r) * nm.d1;
                    double acc_x = 0.0;
                    for (int c = 0; c < nm.d1; ++c) {
                        gmr[c] += g[c] * xr;
                        acc_x += g[c] * mr[c];
                    }
                    gx[r] += acc_x;
                }
                break;
            }
            case Op::RowsLinear: {
                const Node& na = node(n.a);
                const Node& nw = node(n.b);
                const double* A = vals_.data() + na.off;
                const double* W = vals_.data() + nw.off;
                double* ga = grads_.data() + na.off;
                double* gw = grads_.data() + nw.off;
                for (int r = 0; r < na.d0; ++r) {
                    const double* ar = A + static_cast<size_t>(r) * na.d1;
                    double* gar = ga + static_cast<size_t>(r) * na.d1;
                    const double* gr = g + static_cast<size_t>(r) * nw.d0;
                    for (int o = 0; o < nw.d0; ++o) {
                        const double go = gr[o];
                        const double* wo = W + static_cast<size_t>(o) * nw.d1;
                        double* gwo = gw + static_cast<size_t>(o) * nw.d1;
                        for (int c = 0; c < na.d1; ++c) {
                            gar[c] += go * wo[c];
                            gwo[c] += go * ar[c];
                        }
                    }
                }
                break;
            }
            case Op::ConcatCols: {
                const Node& na = node(n.a);
                const Node& nb = node(n.b);
                double* ga = grads_.data() + na.off;
                double* gb = grads_.data() + nb.off;
                const double* gy = g;
                for (int r = 0; r < na.d0; ++r) {
                    for (int c = 0; c < na.d1; ++c) ga[static_cast<size_t>(r) * na.d1 + c] += gy[c];
                    gy += na.d1;
                    for (int c = 0; c < nb.d1; ++c) gb[static_cast<size_t>(r) * nb.d1 + c] += gy[c];
                    gy += nb.d1;
                }
                break;
            }
            case Op::MulBcast: {
                const Node& na = node(n.a);
                const Node& nv = node(n.b);
                const double* A = vals_.data() + na.off;
                const double* V = vals_.data() + nv.off;
                double* ga = grads_.data() + na.off;
                double* gv = grads_.data() + nv.off;
                for (int r = 0; r < na.d0; ++r) {
                    const size_t base = static_cast<size_t>(r) * na.d1;
                    for (int c = 0; c < na.d1; ++c) {
                        ga[base + c] += g[base + c] * V[c];
                        gv[c] += g[base + c] * A[base + c];
                    }
                }
                break;
            }
            case Op::Dot: {
                const Node& na = node(n.a);
                const double* A = vals_.data() + na.off;
                const double* B = vals_.data() + node(n.b).off;
                double* ga = grads_.data() + na.off;
                double* gb = grads_.data() + node(n.b).off;
                const double g0 = g[0];
                for (int i = 0; i < na.len; ++i) {
                    ga[i] += g0 * B[i];
                    gb[i] += g0 * A[i];
                }
                break;
            }
            case Op::Sum: {
                double* ga = grads_.data() + node(n.a).off;
                const double g0 = g[0];
                for (int i = 0; i < node(n.a).len; ++i) ga[i] += g0;
                break;
            }
            case Op::Pick:
                grads_[static_cast<size_t>(node(n.a).off + n.iarg)] += g[0];
                break;
            case Op::Slice: {
                double* ga = grads_.data() + node(n.a).off + n.iarg;
                for (int i = 0; i < n.len; ++i) ga[i] += g[i];
                break;
            }
            case Op::Concat: {
                const double* gy = g;
                for (int i = 0; i < n.aux_n; ++i) {
                    const Node& np = node(aux_[static_cast<size_t>(n.aux_off + i)]);
                    double* gp = grads_.data() + np.off;
                    for (int j = 0; j < np.len; ++j) gp[j] += gy[j];
                    gy += np.len;
                }
                break;
            }
            case Op::Mean: {
                const double inv = 1.0 / static_cast<double>(n.aux_n);
                for (int i = 0; i < n.aux_n; ++i) {
                    double* gp = grads_.data() + node(aux_[static_cast<size_t>(n.aux_off + i)]).off;
                    for (int j = 0; j < n.len; ++j) gp[j] += g[j] * inv;
                }
                break;
            }
            case Op::StackRows: {
                const double* gy = g;
                for (int i = 0; i < n.aux_n; ++i) {
                    const Node& np = node(aux_[static_cast<size_t>(n.aux_off + i)]);
                    double* gp = grads_.data() + np.off;
                    for (int j = 0; j < np.len; ++j) gp[j] += gy[j];
                    gy += np.len;
                }
                break;
            }
            case Op::Softmax:
            case Op::SoftmaxMasked: {
                const int nv = n.op == Op::Softmax ? n.len : n.iarg;
                const double* P = vals_.data() + n.off;
                double* gx = grads_.data() + node(n.a).off;
                double gp = 0.0;
                for (int i = 0; i < nv; ++i) gp += g[i] * P[i];
                for (int i = 0; i < nv; ++i) gx[i] += P[i] * (g[i] - gp);
                break;
            }
        }
    }

    void acc(int id, const double* g, int len, double k) {
        double* dst = grads_.data() + node(id).off;
        if (k == 1.0)
            for (int i = 0; i < len; ++i) dst[i] += g[i];
        else
            for (int i = 0; i < len; ++i) dst[i] += k * g[i];
    }
};

// ---- layer helpers on top of the raw ops ----

// W x (+ b). W is [out_dim, len(x)], created lazily under `name`.
inline Var linear(Graph& g, ParameterStore& ps, const std::string& name, Var x, int out_dim,
                  bool bias) {
    const int in_dim = g.length(x);
    Var w = g.param(ps, name + ".W", {out_dim, in_dim}, in_dim);
    Var y = g.matvec(w, x);
    if (bias) {
        Var b = g.param(ps, name + ".b", {out_dim}, in_dim);
        y = g.add(y, b);
    }
    return y;
}

// Biasless tanh projection: tanh(W x). The shared shape of every projection in
// the language and visual graphs; biaslessness makes tanh(W*0) exactly zero.
inline Var tanh_proj(Graph& g, ParameterStore& ps, const std::string& name, Var x, int out_dim) {
    const int in_dim = g.length(x);
    Var w = g.param(ps, name + ".W", {out_dim, in_dim}, in_dim);
    return g.tanh(g.matvec(w, x));
}

// Row-batched biasless tanh projection: tanh(A W^T) for A [n,in].
inline Var tanh_proj_rows(Graph& g, ParameterStore& ps, const std::string& name, Var a,
                          int out_dim) {
    const int in_dim = g.cols_of(a);
    Var w = g.param(ps, name + ".W", {out_dim, in_dim}, in_dim);
    return g.tanh(g.rows_linear(a, w));
}

struct LstmOut {
    Var h;
    Var c;
};

// Standard LSTM cell (gate order i, f, g, o; single bias vector).
inline LstmOut lstm_step(Graph& g, ParameterStore& ps, const std::string& name, Var x, Var h_prev,
                         Var c_prev) {
    const int in_dim = g.length(x);
    const int hid = g.length(h_prev);
    require(g.length(c_prev) == hid, "lstm_step: hidden/cell dimension mismatch");
    Var w_ih = g.param(ps, name + ".W_ih", {4 * hid, in_dim}, in_dim);
    Var w_hh = g.param(ps, name + ".W_hh", {4 * hid, hid}, hid);
    Var b = g.param(ps, name + ".b", {4 * hid}, in_dim + hid);
    Var z = g.add(g.add(g.matvec(w_ih, x), g.matvec(w_hh, h_prev)), b);
    Var i = g.sigmoid(g.slice(z, 0, hid));
    Var f = g.sigmoid(g.slice(z, hid, hid));
    Var cand = g.tanh(g.slice(z, 2 * hid, hid));
    Var o = g.sigmoid(g.slice(z, 3 * hid, hid));
    Var c = g.add(g.mul(f, c_prev), g.mul(i, cand));
    Var h = g.mul(o, g.tanh(c));
    return {h, c};
}

}  // namespace graphnav
