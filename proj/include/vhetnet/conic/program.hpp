#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vhetnet/common.hpp"

namespace vhetnet::conic {

struct Var {
    std::int32_t id = -1;
    bool valid() const { return id >= 0; }
};

struct LinTerm {
    std::int32_t var;
    double coef;
};

// Affine expression sum_i coef_i * x_i + constant. Terms may repeat a
// variable; consumers fold duplicates.
class LinExpr {
  public:
    LinExpr() = default;
    LinExpr(double c) : constant_(c) {}
    LinExpr(Var v) {
        if (!v.valid()) throw Error("LinExpr: invalid variable");
        terms_.push_back({v.id, 1.0});
    }

    LinExpr& operator+=(const LinExpr& o) {
        terms_.insert(terms_.end(), o.terms_.begin(), o.terms_.end());
        constant_ += o.constant_;
        return *this;
    }
    LinExpr& operator-=(const LinExpr& o) {
        terms_.reserve(terms_.size() + o.terms_.size());
        for (const LinTerm& t : o.terms_) terms_.push_back({t.var, -t.coef});
        constant_ -= o.constant_;
        return *this;
    }
    LinExpr& operator*=(double s) {
        for (LinTerm& t : terms_) t.coef *= s;
        constant_ *= s;
        return *this;
    }

    const std::vector<LinTerm>& terms() const { return terms_; }
    double constant() const { return constant_; }

    double eval(std::span<const double> x) const {
        double v = constant_;
        for (const LinTerm& t : terms_) v += t.coef * x[static_cast<std::size_t>(t.var)];
        return v;
    }

  private:
    std::vector<LinTerm> terms_;
    double constant_ = 0.0;
};

inline LinExpr operator+(LinExpr a, const LinExpr& b) { return a += b; }
inline LinExpr operator-(LinExpr a, const LinExpr& b) { return a -= b; }
inline LinExpr operator*(double s, LinExpr e) { return e *= s; }
inline LinExpr operator*(LinExpr e, double s) { return e *= s; }
inline LinExpr operator-(LinExpr e) { return e *= -1.0; }
inline LinExpr operator+(Var a, const LinExpr& b) { return LinExpr(a) + b; }
inline LinExpr operator-(Var a, const LinExpr& b) { return LinExpr(a) - b; }
inline LinExpr operator*(double s, Var v) { return s * LinExpr(v); }

enum class ConeKind { Zero, NonNeg, SecondOrder };

// Zero:        every row == 0
// NonNeg:      the single row >= 0
// SecondOrder: rows[0] >= || rows[1..] ||_2
struct Constraint {
    ConeKind kind;
    std::vector<LinExpr> rows;
    std::string label;

    double residual(std::span<const double> x) const {
        switch (kind) {
            case ConeKind::Zero: {
                double r = 0.0;
                for (const LinExpr& e : rows) r = std::max(r, std::abs(e.eval(x)));
                return r;
            }
            case ConeKind::NonNeg:
                return std::max(0.0, -rows[0].eval(x));
            case ConeKind::SecondOrder: {
                double nrm2 = 0.0;
                for (std::size_t i = 1; i < rows.size(); ++i) {
                    const double v = rows[i].eval(x);
                    nrm2 += v * v;
                }
                return std::max(0.0, std::sqrt(nrm2) - rows[0].eval(x));
            }
        }
        return 0.0;
    }
};

enum class SolveStatus { Optimal, Infeasible, Unbounded, NumericalFailure };

inline const char* to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::Optimal: return "optimal";
        case SolveStatus::Infeasible: return "infeasible";
        case SolveStatus::Unbounded: return "unbounded";
        case SolveStatus::NumericalFailure: return "numerical_failure";
    }
    return "?";
}

struct Solution {
    SolveStatus status = SolveStatus::NumericalFailure;
    std::vector<double> x;  // full variable vector, only meaningful when Optimal
    double objective = std::numeric_limits<double>::quiet_NaN();  // maximize sense
    int iterations = 0;
    double primal_residual = std::numeric_limits<double>::quiet_NaN();
    double dual_residual = std::numeric_limits<double>::quiet_NaN();
    double gap = std::numeric_limits<double>::quiet_NaN();
};

// Mixed-integer conic program over Zero / NonNeg / SecondOrder cones with a
// linear objective (maximize sense). Binary marks are metadata: relaxations
// treat those variables as continuous in [0, 1].
class Program {
  public:
    Var add_var(std::string name) {
        names_.push_back(std::move(name));
        is_binary_.push_back(false);
        return Var{static_cast<std::int32_t>(names_.size() - 1)};
    }

    void mark_binary(Var v) {
        check_var(v);
        if (!is_binary_[static_cast<std::size_t>(v.id)]) {
            is_binary_[static_cast<std::size_t>(v.id)] = true;
            binaries_.push_back(v.id);
        }
    }

    void set_objective_maximize(LinExpr e) {
        check_expr(e);
        objective_ = std::move(e);
    }

    void add_zero(LinExpr e, std::string label = {}) {
        check_expr(e);
        constraints_.push_back({ConeKind::Zero, {std::move(e)}, std::move(label)});
    }

    void add_nonneg(LinExpr e, std::string label = {}) {
        check_expr(e);
        constraints_.push_back({ConeKind::NonNeg, {std::move(e)}, std::move(label)});
    }

    void add_soc(LinExpr head, std::vector<LinExpr> tail, std::string label = {}) {
        if (tail.empty()) throw Error("add_soc: cone dimension must be at least 2");
        check_expr(head);
        for (const LinExpr& e : tail) check_expr(e);
        std::vector<LinExpr> rows;
        rows.reserve(tail.size() + 1);
        rows.push_back(std::move(head));
        for (LinExpr& e : tail) rows.push_back(std::move(e));
        constraints_.push_back({ConeKind::SecondOrder, std::move(rows), std::move(label)});
    }

    int num_vars() const { return static_cast<int>(names_.size()); }
    int num_constraints() const { return static_cast<int>(constraints_.size()); }
    const std::string& var_name(Var v) const {
        check_var(v);
        return names_[static_cast<std::size_t>(v.id)];
    }
    bool is_binary(Var v) const {
        check_var(v);
        return is_binary_[static_cast<std::size_t>(v.id)];
    }
    const std::vector<std::int32_t>& binaries() const { return binaries_; }
    const std::vector<Constraint>& constraints() const { return constraints_; }
    const LinExpr& objective() const { return objective_; }

    double objective_value(std::span<const double> x) const { return objective_.eval(x); }

    // Per-constraint violation at x; all ~0 for a feasible point.
    std::vector<double> residuals(std::span<const double> x) const {
        if (static_cast<int>(x.size()) != num_vars())
            throw Error("residuals: point has wrong dimension");
        std::vector<double> r;
        r.reserve(constraints_.size());
        for (const Constraint& c : constraints_) r.push_back(c.residual(x));
        return r;
    }

    double max_residual(std::span<const double> x) const {
        double m = 0.0;
        for (double r : residuals(x)) m = std::max(m, r);
        return m;
    }

    void dump(std::ostream& os) const {
        os << "maximize " << expr_str(objective_) << "\n";
        for (const Constraint& c : constraints_) {
            switch (c.kind) {
                case ConeKind::Zero:
                    os << "  " << expr_str(c.rows[0]) << " == 0";
                    break;
                case ConeKind::NonNeg:
                    os << "  " << expr_str(c.rows[0]) << " >= 0";
                    break;
                case ConeKind::SecondOrder:
                    os << "  soc(" << c.rows.size() << "): " << expr_str(c.rows[0]) << " >= ||";
                    for (std::size_t i = 1; i < c.rows.size(); ++i)
                        os << (i > 1 ? "; " : " ") << expr_str(c.rows[i]);
                    os << " ||";
                    break;
            }
            if (!c.label.empty()) os << "   [" << c.label << "]";
            os << "\n";
        }
        if (!binaries_.empty()) {
            os << "  binary:";
            for (std::int32_t id : binaries_) os << " " << names_[static_cast<std::size_t>(id)];
            os << "\n";
        }
    }

  private:
    void check_var(Var v) const {
        if (!v.valid() || v.id >= num_vars()) throw Error("Program: unknown variable");
    }
    void check_expr(const LinExpr& e) const {
        for (const LinTerm& t : e.terms())
            if (t.var < 0 || t.var >= num_vars()) throw Error("Program: expression references unknown variable");
    }

    std::string expr_str(const LinExpr& e) const {
        std::string s;
        for (const LinTerm& t : e.terms()) {
            if (!s.empty()) s += " + ";
            s += std::to_string(t.coef) + "*" + names_[static_cast<std::size_t>(t.var)];
        }
        if (e.constant() != 0.0 || s.empty()) {
            if (!s.empty()) s += " + ";
            s += std::to_string(e.constant());
        }
        return s;
    }

    std::vector<std::string> names_;
    std::vector<bool> is_binary_ = {};
    std::vector<std::int32_t> binaries_;
    std::vector<Constraint> constraints_;
    LinExpr objective_;
};

}  // namespace vhetnet::conic
