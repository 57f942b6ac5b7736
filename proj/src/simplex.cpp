#include "frown/simplex.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace frown::lp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPricingTol = 1e-9;
constexpr double kPivotTol = 1e-9;
constexpr double kFeasibilityTol = 1e-7;
// Harris dip allowed per step; well inside kFeasibilityTol so ordinary steps
// never trip the repair phase.
constexpr double kHarrisTol = 1e-9;
constexpr double kRelativePivotTol = 1e-7;
constexpr double kRayTol = 1e-7;
constexpr int kRefactorPeriod = 32;

} // namespace

int LpProblem::addVariable(std::string name)
{
    variables.push_back(std::move(name));
    objective.push_back(0.0);
    return static_cast<int>(variables.size() - 1);
}

void LpProblem::addRow(std::vector<std::pair<int, double>> terms, RowType type, double rhs, std::string name)
{
    for (const auto &[index, coefficient] : terms)
        if (index < 0 || static_cast<std::size_t>(index) >= variables.size() || !std::isfinite(coefficient))
            throw SolverError("row '" + name + "' references an invalid variable or coefficient");
    if (!std::isfinite(rhs))
        throw SolverError("row '" + name + "' has a non-finite right-hand side");
    rows.push_back({std::move(terms), type, rhs, std::move(name)});
}

double LpProblem::evaluate(const Vector &point) const
{
    double value = objectiveConstant;
    for (std::size_t j = 0; j < objective.size(); ++j)
        value += objective[j] * point[static_cast<Eigen::Index>(j)];
    return value;
}

double LpProblem::worstSlack(const Vector &point) const
{
    double worst = kInf;
    for (const Row &row : rows) {
        double lhs = 0.0;
        for (const auto &[index, coefficient] : row.terms)
            lhs += coefficient * point[index];
        double slack = 0.0;
        switch (row.type) {
        case RowType::Le: slack = row.rhs - lhs; break;
        case RowType::Ge: slack = lhs - row.rhs; break;
        case RowType::Eq: slack = -std::abs(lhs - row.rhs); break;
        }
        worst = std::min(worst, slack);
    }
    return worst;
}

std::string LpProblem::toLpText() const
{
    std::ostringstream out;
    out.precision(17);
    auto name = [&](int j) { return variables[static_cast<std::size_t>(j)]; };
    auto terms = [&](const std::vector<std::pair<int, double>> &list) {
        bool first = true;
        for (const auto &[j, c] : list) {
            if (c == 0.0)
                continue;
            out << (first ? (c < 0 ? "- " : "") : (c < 0 ? " - " : " + ")) << std::abs(c) << ' ' << name(j);
            first = false;
        }
        if (first)
            out << '0';
    };

    out << (maximize ? "Maximize\n" : "Minimize\n") << " obj: ";
    std::vector<std::pair<int, double>> objectiveTerms;
    for (std::size_t j = 0; j < objective.size(); ++j)
        objectiveTerms.emplace_back(static_cast<int>(j), objective[j]);
    terms(objectiveTerms);
    if (objectiveConstant != 0.0)
        out << (objectiveConstant < 0 ? " - " : " + ") << std::abs(objectiveConstant);
    out << "\nSubject To\n";
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const Row &row = rows[r];
        out << ' ' << (row.name.empty() ? "c" + std::to_string(r) : row.name) << ": ";
        terms(row.terms);
        out << (row.type == RowType::Le ? " <= " : row.type == RowType::Ge ? " >= " : " = ") << row.rhs << '\n';
    }
    out << "Bounds\n";
    for (const std::string &variable : variables)
        out << ' ' << variable << " free\n";
    out << "End\n";
    return out.str();
}

namespace {

/// Original variable = offset + sum of coef * column.
struct VariableMap
{
    double offset = 0.0;
    int plus = -1;
    double plusCoef = 0.0;
    int minus = -1;
};

class RevisedSimplex
{
public:
    RevisedSimplex(Matrix a, Vector b) : _a(std::move(a)), _b(std::move(b)) {}

    /// Initial basis; one column per row.
    void setBasis(std::vector<int> basis)
    {
        _basis = std::move(basis);
        _isBasic.assign(static_cast<std::size_t>(_a.cols()), 0);
        for (const int j : _basis)
            _isBasic[static_cast<std::size_t>(j)] = 1;
        refactor();
    }

    /// Minimizes cost over columns allowed to enter. Returns false when unbounded.
    bool run(const Vector &cost, const std::vector<char> &allowed, long &iterations)
    {
        int sinceRefactor = 0;
        while (true) {
            if (iterations >= kMaxSimplexIterations)
                throw SolverError("simplex iteration cap exceeded");

            const Step step = infeasibleRows() > 0 ? repairStep(allowed) : optimalityStep(cost, allowed);
            if (step.entering < 0) {
                if (infeasibleRows() == 0)
                    return true;
                if (sinceRefactor == 0)
                    throw SolverError("simplex lost primal feasibility");
                refactor();
                sinceRefactor = 0;
                continue;
            }
            if (step.leaving < 0) {
                // A stale inverse can fake a ray; only trust a fresh one.
                if (sinceRefactor == 0)
                    return false;
                refactor();
                sinceRefactor = 0;
                continue;
            }

            pivot(step.leaving, step.entering, step.alpha, step.theta);
            ++iterations;
            if (++sinceRefactor >= kRefactorPeriod) {
                refactor();
                sinceRefactor = 0;
            }
        }
    }

    /// Number of basic values below zero by more than the feasibility tolerance.
    int infeasibleRows() const
    {
        int count = 0;
        for (Eigen::Index i = 0; i < _xB.size(); ++i)
            count += _xB[i] < -kFeasibilityTol;
        return count;
    }

    /// Pivots column `entering` into the basis at row r regardless of cost.
    bool tryReplace(int r, const std::vector<char> &allowed)
    {
        int best = -1;
        Vector bestAlpha;
        for (Eigen::Index j = 0; j < _a.cols(); ++j) {
            if (_isBasic[static_cast<std::size_t>(j)] || !allowed[static_cast<std::size_t>(j)])
                continue;
            Vector alpha = _binv * _a.col(j);
            if (std::abs(alpha[r]) > kPivotTol && (best < 0 || std::abs(alpha[r]) > std::abs(bestAlpha[r]))) {
                best = static_cast<int>(j);
                bestAlpha = std::move(alpha);
            }
        }
        if (best < 0)
            return false;
        pivot(r, best, bestAlpha, _xB[r] / bestAlpha[r]);
        return true;
    }

    /// Columns from this index on are artificial; once basic they must stay at zero.
    void setFirstArtificial(int index) { _firstArtificial = index; }

    void refactor()
    {
        const Eigen::Index m = _a.rows();
        if (m == 0) {
            _binv.resize(0, 0);
            _xB.resize(0);
            return;
        }
        Matrix basisMatrix(m, m);
        for (Eigen::Index i = 0; i < m; ++i)
            basisMatrix.col(i) = _a.col(_basis[static_cast<std::size_t>(i)]);
        _binv = basisMatrix.partialPivLu().inverse();
        _xB = _binv * _b;
        if (!_binv.allFinite() || !_xB.allFinite())
            throw SolverError("simplex basis became singular");
        for (Eigen::Index i = 0; i < m; ++i)
            if (_xB[i] < 0.0 && _xB[i] > -kFeasibilityTol)
                _xB[i] = 0.0;
    }

    const std::vector<int> &basis() const { return _basis; }
    const Vector &basicValues() const { return _xB; }

private:
    // A basic artificial touched by the entering column leaves first, at a
    // zero step, so it can never take a nonzero value.
    int artificialBlock(const Vector &alpha) const
    {
        if (alpha.size() == 0 || _firstArtificial >= _a.cols())
            return -1;
        const double floor = kRelativePivotTol * std::max(1.0, alpha.cwiseAbs().maxCoeff());
        int leaving = -1;
        for (Eigen::Index i = 0; i < alpha.size(); ++i)
            if (_basis[static_cast<std::size_t>(i)] >= _firstArtificial && std::abs(alpha[i]) > floor &&
                (leaving < 0 || std::abs(alpha[i]) > std::abs(alpha[leaving])))
                leaving = static_cast<int>(i);
        return leaving;
    }

    struct Step
    {
        int entering = -1;
        int leaving = -1; // -1 with entering >= 0 means an unbounded ray
        Vector alpha;
        double theta = 0.0;
    };

    // Bland: first improving column. A column whose pivot would be tiny next
    // to the rest of its entries is passed over in favour of a later one; if
    // all are, the best-conditioned one is used.
    Step optimalityStep(const Vector &cost, const std::vector<char> &allowed) const
    {
        const Eigen::Index m = _a.rows();
        Vector costB(m);
        for (Eigen::Index i = 0; i < m; ++i)
            costB[i] = cost[_basis[static_cast<std::size_t>(i)]];
        const Eigen::RowVectorXd duals = costB.transpose() * _binv;
        const double rayTol = kRayTol * std::max(1.0, m > 0 ? duals.cwiseAbs().maxCoeff() : 0.0);

        Step fallback;
        double fallbackQuality = -1.0;
        for (Eigen::Index j = 0; j < _a.cols(); ++j) {
            if (_isBasic[static_cast<std::size_t>(j)] || !allowed[static_cast<std::size_t>(j)])
                continue;
            const double reduced = cost[j] - duals.dot(_a.col(j));
            if (reduced >= -kPricingTol)
                continue;
            Vector column = _binv * _a.col(j);
            if (const int blocked = artificialBlock(column); blocked >= 0)
                return Step{static_cast<int>(j), blocked, std::move(column), 0.0};
            const int row = ratioTest(column);
            if (row < 0) {
                // Without a blocking row a reduced cost this small is
                // rounding on an ill-conditioned basis, not a real ray.
                if (reduced > -rayTol)
                    continue;
                Step ray;
                ray.entering = static_cast<int>(j);
                return ray;
            }
            const double quality = column[row] / std::max(1.0, column.cwiseAbs().maxCoeff());
            Step step{static_cast<int>(j), row, std::move(column), 0.0};
            step.theta = std::max(_xB[row] / step.alpha[row], 0.0);
            if (quality >= kRelativePivotTol)
                return step;
            if (quality > fallbackQuality) {
                fallbackQuality = quality;
                fallback = std::move(step);
            }
        }
        return fallback;
    }

    // Lowers the total infeasibility of the basic values. Rows already
    // feasible block at zero as usual; infeasible rows moving up block when
    // they reach zero, so the step never creates new infeasibility.
    Step repairStep(const std::vector<char> &allowed) const
    {
        const Eigen::Index m = _a.rows();
        Vector costB = Vector::Zero(m);
        for (Eigen::Index i = 0; i < m; ++i)
            if (_xB[i] < -kFeasibilityTol)
                costB[i] = -1.0;
        const Eigen::RowVectorXd duals = costB.transpose() * _binv;

        for (Eigen::Index j = 0; j < _a.cols(); ++j) {
            if (_isBasic[static_cast<std::size_t>(j)] || !allowed[static_cast<std::size_t>(j)])
                continue;
            if (-duals.dot(_a.col(j)) >= -kPricingTol)
                continue;
            Vector column = _binv * _a.col(j);
            if (const int blocked = artificialBlock(column); blocked >= 0)
                return Step{static_cast<int>(j), blocked, std::move(column), 0.0};
            // Harris two-pass, as in the optimality phase.
            auto ratio = [&](Eigen::Index i, double slack) {
                if (_xB[i] >= -kFeasibilityTol && column[i] > kPivotTol)
                    return std::max(_xB[i] + slack, 0.0) / column[i];
                if (_xB[i] < -kFeasibilityTol && column[i] < -kPivotTol)
                    return (_xB[i] - slack) / column[i];
                return kInf;
            };
            double bound = kInf;
            for (Eigen::Index i = 0; i < m; ++i)
                bound = std::min(bound, ratio(i, kHarrisTol));
            int leaving = -1;
            double best = kInf;
            for (Eigen::Index i = 0; i < m; ++i) {
                const double r = ratio(i, 0.0);
                if (r > bound)
                    continue;
                if (leaving < 0 || std::abs(column[i]) > std::abs(column[leaving])) {
                    leaving = static_cast<int>(i);
                    best = r;
                }
            }
            if (leaving < 0)
                continue;
            return Step{static_cast<int>(j), leaving, std::move(column), std::max(best, 0.0)};
        }
        return {};
    }

    // Two passes: the step allowed when every basic value may dip by
    // kHarrisTol, then the largest pivot among rows blocking within it.
    // Large pivots keep the explicit inverse well conditioned on the
    // near-parallel rows produced by tight intervals.
    int ratioTest(const Vector &alpha) const
    {
        double bound = kInf;
        for (Eigen::Index i = 0; i < alpha.size(); ++i)
            if (alpha[i] > kPivotTol)
                bound = std::min(bound, std::max(_xB[i] + kHarrisTol, 0.0) / alpha[i]);
        int leaving = -1;
        for (Eigen::Index i = 0; i < alpha.size(); ++i) {
            if (alpha[i] <= kPivotTol || _xB[i] / alpha[i] > bound)
                continue;
            if (leaving < 0 || alpha[i] > alpha[leaving] ||
                (alpha[i] == alpha[leaving] &&
                 _basis[static_cast<std::size_t>(i)] < _basis[static_cast<std::size_t>(leaving)]))
                leaving = static_cast<int>(i);
        }
        return leaving;
    }

    void pivot(int r, int entering, const Vector &alpha, double theta)
    {
        const double pivotValue = alpha[r];
        _binv.row(r) /= pivotValue;
        for (Eigen::Index i = 0; i < _binv.rows(); ++i) {
            if (i == r || alpha[i] == 0.0)
                continue;
            _binv.row(i) -= alpha[i] * _binv.row(r);
            _xB[i] -= alpha[i] * theta;
        }
        _xB[r] = theta;
        _isBasic[static_cast<std::size_t>(_basis[static_cast<std::size_t>(r)])] = 0;
        _isBasic[static_cast<std::size_t>(entering)] = 1;
        _basis[static_cast<std::size_t>(r)] = entering;
    }

    Matrix _a;
    Vector _b;
    Matrix _binv;
    Vector _xB;
    std::vector<int> _basis;
    std::vector<char> _isBasic;
    int _firstArtificial = std::numeric_limits<int>::max();
};

} // namespace

Solution solve(const LpProblem &problem)
{
    const std::size_t nVars = problem.variableCount();

    // Singleton rows become variable bounds.
    std::vector<double> lower(nVars, -kInf);
    std::vector<double> upper(nVars, kInf);
    std::vector<const Row *> general;
    for (const Row &row : problem.rows) {
        std::vector<std::pair<int, double>> nonzero;
        for (const auto &term : row.terms)
            if (term.second != 0.0)
                nonzero.push_back(term);
        if (nonzero.size() != 1) {
            if (nonzero.empty()) {
                const bool ok = row.type == RowType::Le ? 0.0 <= row.rhs + kFeasibilityTol
                                : row.type == RowType::Ge ? 0.0 >= row.rhs - kFeasibilityTol
                                                          : std::abs(row.rhs) <= kFeasibilityTol;
                if (!ok)
                    throw InfeasibleError("infeasible: empty row '" + row.name + "' cannot hold");
                continue;
            }
            general.push_back(&row);
            continue;
        }
        const auto [j, a] = nonzero.front();
        const double value = row.rhs / a;
        const bool asUpper = (row.type == RowType::Le) == (a > 0.0);
        if (row.type == RowType::Eq || asUpper)
            upper[static_cast<std::size_t>(j)] = std::min(upper[static_cast<std::size_t>(j)], value);
        if (row.type == RowType::Eq || !asUpper)
            lower[static_cast<std::size_t>(j)] = std::max(lower[static_cast<std::size_t>(j)], value);
    }

    // Column layout.
    std::vector<VariableMap> maps(nVars);
    std::vector<double> boundRows; // x' <= width for doubly bounded variables
    std::vector<int> boundColumns;
    int columns = 0;
    for (std::size_t j = 0; j < nVars; ++j) {
        VariableMap &map = maps[j];
        if (lower[j] > upper[j]) {
            if (lower[j] - upper[j] > kFeasibilityTol * std::max(1.0, std::abs(lower[j])))
                throw InfeasibleError("infeasible: bounds of '" + problem.variables[j] + "' cross");
            upper[j] = lower[j];
        }
        if (std::isfinite(lower[j]) && std::isfinite(upper[j]) && upper[j] == lower[j]) {
            map.offset = lower[j];
        } else if (std::isfinite(lower[j])) {
            map.offset = lower[j];
            map.plus = columns++;
            map.plusCoef = 1.0;
            if (std::isfinite(upper[j])) {
                boundRows.push_back(upper[j] - lower[j]);
                boundColumns.push_back(map.plus);
            }
        } else if (std::isfinite(upper[j])) {
            map.offset = upper[j];
            map.plus = columns++;
            map.plusCoef = -1.0;
        } else {
            map.plus = columns++;
            map.plusCoef = 1.0;
            map.minus = columns++;
        }
    }
    const int structural = columns;

    const auto m = static_cast<Eigen::Index>(general.size() + boundRows.size());
    std::vector<RowType> types;
    Matrix rowsMatrix = Matrix::Zero(m, structural);
    Vector rhs(m);
    Eigen::Index r = 0;
    for (const Row *row : general) {
        double constant = 0.0;
        for (const auto &[j, a] : row->terms) {
            const VariableMap &map = maps[static_cast<std::size_t>(j)];
            constant += a * map.offset;
            if (map.plus >= 0)
                rowsMatrix(r, map.plus) += a * map.plusCoef;
            if (map.minus >= 0)
                rowsMatrix(r, map.minus) -= a;
        }
        rhs[r] = row->rhs - constant;
        types.push_back(row->type);
        ++r;
    }
    for (std::size_t b = 0; b < boundRows.size(); ++b) {
        rowsMatrix(r, boundColumns[b]) = 1.0;
        rhs[r] = boundRows[b];
        types.push_back(RowType::Le);
        ++r;
    }

    // Slacks, sign normalization and artificials.
    int slackCount = 0;
    for (const RowType type : types)
        slackCount += type != RowType::Eq;
    std::vector<int> slackOf(static_cast<std::size_t>(m), -1);
    std::vector<double> slackSign(static_cast<std::size_t>(m), 0.0);
    int nextSlack = structural;
    for (Eigen::Index i = 0; i < m; ++i) {
        if (types[static_cast<std::size_t>(i)] == RowType::Eq)
            continue;
        slackOf[static_cast<std::size_t>(i)] = nextSlack++;
        slackSign[static_cast<std::size_t>(i)] = types[static_cast<std::size_t>(i)] == RowType::Le ? 1.0 : -1.0;
    }
    std::vector<char> needsArtificial(static_cast<std::size_t>(m), 0);
    int artificialCount = 0;
    for (Eigen::Index i = 0; i < m; ++i) {
        const double flip = rhs[i] < 0.0 ? -1.0 : 1.0;
        const bool slackBasic = slackOf[static_cast<std::size_t>(i)] >= 0 && slackSign[static_cast<std::size_t>(i)] * flip > 0.0;
        if (!slackBasic) {
            needsArtificial[static_cast<std::size_t>(i)] = 1;
            ++artificialCount;
        }
    }

    const int total = structural + slackCount + artificialCount;
    Matrix a = Matrix::Zero(m, total);
    Vector b(m);
    std::vector<int> basis(static_cast<std::size_t>(m));
    int nextArtificial = structural + slackCount;
    for (Eigen::Index i = 0; i < m; ++i) {
        const double flip = rhs[i] < 0.0 ? -1.0 : 1.0;
        a.row(i).head(structural) = flip * rowsMatrix.row(i);
        b[i] = flip * rhs[i];
        const int slack = slackOf[static_cast<std::size_t>(i)];
        if (slack >= 0)
            a(i, slack) = flip * slackSign[static_cast<std::size_t>(i)];
        if (needsArtificial[static_cast<std::size_t>(i)]) {
            a(i, nextArtificial) = 1.0;
            basis[static_cast<std::size_t>(i)] = nextArtificial++;
        } else {
            basis[static_cast<std::size_t>(i)] = slack;
        }
    }

    // Objective over the structural columns (always minimized).
    const double senseSign = problem.maximize ? -1.0 : 1.0;
    Vector cost = Vector::Zero(total);
    for (std::size_t j = 0; j < nVars; ++j) {
        const VariableMap &map = maps[j];
        const double c = senseSign * problem.objective[j];
        if (map.plus >= 0)
            cost[map.plus] += c * map.plusCoef;
        if (map.minus >= 0)
            cost[map.minus] -= c;
    }

    Solution solution;
    RevisedSimplex simplex(a, b);
    simplex.setBasis(basis);
    const int firstArtificial = structural + slackCount;

    if (artificialCount > 0) {
        Vector phaseOne = Vector::Zero(total);
        phaseOne.tail(artificialCount).setOnes();
        std::vector<char> all(static_cast<std::size_t>(total), 1);
        simplex.run(phaseOne, all, solution.iterations);
        simplex.refactor();
        double infeasibility = 0.0;
        for (Eigen::Index i = 0; i < m; ++i)
            if (simplex.basis()[static_cast<std::size_t>(i)] >= firstArtificial)
                infeasibility += simplex.basicValues()[i];
        if (infeasibility > kFeasibilityTol * std::max(1.0, b.cwiseAbs().maxCoeff()))
            throw InfeasibleError("infeasible linear program");

        std::vector<char> real(static_cast<std::size_t>(total), 1);
        for (int j = firstArtificial; j < total; ++j)
            real[static_cast<std::size_t>(j)] = 0;
        for (Eigen::Index i = 0; i < m; ++i)
            if (simplex.basis()[static_cast<std::size_t>(i)] >= firstArtificial)
                simplex.tryReplace(static_cast<int>(i), real);
        simplex.refactor();
    }

    simplex.setFirstArtificial(firstArtificial);
    std::vector<char> allowed(static_cast<std::size_t>(total), 1);
    for (int j = firstArtificial; j < total; ++j)
        allowed[static_cast<std::size_t>(j)] = 0;
    // A fresh factorization can expose drift the updates hid; rerun until the
    // refactored basis is both feasible and optimal.
    for (int attempt = 0;; ++attempt) {
        if (!simplex.run(cost, allowed, solution.iterations))
            throw SolverError("unbounded linear program");
        simplex.refactor();
        if (simplex.infeasibleRows() == 0)
            break;
        if (attempt >= 3)
            throw SolverError("simplex lost primal feasibility");
    }

    Vector columnValues = Vector::Zero(total);
    for (Eigen::Index i = 0; i < m; ++i)
        columnValues[simplex.basis()[static_cast<std::size_t>(i)]] = std::max(simplex.basicValues()[i], 0.0);

    solution.primal.resize(static_cast<Eigen::Index>(nVars));
    for (std::size_t j = 0; j < nVars; ++j) {
        const VariableMap &map = maps[j];
        double value = map.offset;
        if (map.plus >= 0)
            value += map.plusCoef * columnValues[map.plus];
        if (map.minus >= 0)
            value -= columnValues[map.minus];
        solution.primal[static_cast<Eigen::Index>(j)] = value;
    }
    solution.value = problem.evaluate(solution.primal);
    if (!std::isfinite(solution.value))
        throw SolverError("simplex produced a non-finite optimum");
    return solution;
}

} // namespace frown::lp
