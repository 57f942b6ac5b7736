#pragma once

#include "frown/model.hpp"

#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace frown::lp {

enum class RowType { Le, Ge, Eq };

struct Row
{
    std::vector<std::pair<int, double>> terms;
    RowType type = RowType::Le;
    double rhs = 0.0;
    std::string name;
};

/// A linear program over free variables. Every bound, including simple
/// variable bounds, is stated as a row.
struct LpProblem
{
    std::vector<std::string> variables;
    std::vector<double> objective;
    double objectiveConstant = 0.0;
    bool maximize = false;
    std::vector<Row> rows;

    int addVariable(std::string name);
    void addRow(std::vector<std::pair<int, double>> terms, RowType type, double rhs, std::string name = {});

    std::size_t variableCount() const { return variables.size(); }
    std::size_t rowCount() const { return rows.size(); }

    double evaluate(const Vector &point) const;

    /// Most negative slack over all rows at `point` (>= 0 when feasible).
    double worstSlack(const Vector &point) const;

    /// CPLEX-style LP text for cross-checking with external solvers.
    std::string toLpText() const;
};

/// The constraints admit no point.
class InfeasibleError : public SolverError
{
public:
    using SolverError::SolverError;
};

struct Solution
{
    double value = 0.0;
    Vector primal;
    long iterations = 0;
};

inline constexpr long kMaxSimplexIterations = 1'000'000;

/// Dense revised simplex with Bland's rule, two phases. Throws
/// InfeasibleError when no point satisfies the rows, SolverError when the
/// problem is unbounded or the iteration cap is hit.
Solution solve(const LpProblem &problem);

} // namespace frown::lp
