#pragma once

#include <stdexcept>
#include <string>

namespace osposg {

/// Base class for all errors raised by the library.
class solver_error : public std::runtime_error {
public:
    explicit solver_error(const std::string& what) : std::runtime_error(what) {}
};

/// Model validation failed (malformed game description).
class validation_error : public solver_error {
public:
    explicit validation_error(const std::string& what) : solver_error(what) {}
};

class negative_probability_error : public validation_error {
public:
    explicit negative_probability_error(const std::string& what) : validation_error(what) {}
};

class row_sum_mismatch_error : public validation_error {
public:
    explicit row_sum_mismatch_error(const std::string& what) : validation_error(what) {}
};

/// A partition block reaches states outside the declared successor block.
class partition_leak_error : public validation_error {
public:
    explicit partition_leak_error(const std::string& what) : validation_error(what) {}
};

class gamma_out_of_range_error : public validation_error {
public:
    explicit gamma_out_of_range_error(const std::string& what) : validation_error(what) {}
};

/// Belief update conditioned on an observation with zero probability.
class zero_probability_observation_error : public solver_error {
public:
    explicit zero_probability_observation_error(const std::string& what) : solver_error(what) {}
};

/// A value-bound structure was queried before any element was inserted.
class empty_bound_error : public solver_error {
public:
    explicit empty_bound_error(const std::string& what) : solver_error(what) {}
};

/// A value escaped the admissible range [L, U] by more than the tolerance.
class range_violation_error : public solver_error {
public:
    explicit range_violation_error(const std::string& what) : solver_error(what) {}
};

/// Strategy composition referenced a subgame alpha-vector that was not supplied.
class missing_subgame_alpha_error : public solver_error {
public:
    explicit missing_subgame_alpha_error(const std::string& what) : solver_error(what) {}
};

/// The resolving LP has no strategy dominating the stored gadget values.
class infeasible_gadget_error : public solver_error {
public:
    explicit infeasible_gadget_error(const std::string& what) : solver_error(what) {}
};

/// An LP expected to be solvable came back infeasible or unbounded.
class lp_failure_error : public solver_error {
public:
    explicit lp_failure_error(const std::string& what) : solver_error(what) {}
};

/// The LP solver could not reach a verified optimum.
class numerical_failure_error : public solver_error {
public:
    explicit numerical_failure_error(const std::string& what) : solver_error(what) {}
};

/// A brute-force computation would exceed its configured size cap.
class size_limit_error : public solver_error {
public:
    explicit size_limit_error(const std::string& what) : solver_error(what) {}
};

/// Random graph generation failed to produce a connected graph.
class disconnected_graph_error : public solver_error {
public:
    explicit disconnected_graph_error(const std::string& what) : solver_error(what) {}
};

} // namespace osposg
