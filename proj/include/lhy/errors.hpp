#pragma once

#include <stdexcept>
#include <string>

namespace lhy {

// Every failure the library reports derives from lhy::error so callers can
// separate numerical trouble from programming errors.
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class domain_error : public error {
public:
    using error::error;
};

class solver_failure : public error {
public:
    using error::error;
};

class invalid_potential : public error {
public:
    using error::error;
};

class quadrature_failure : public error {
public:
    using error::error;
};

// two independent computations of the same quantity disagree
class consistency_failure : public error {
public:
    using error::error;
};

// a bound that should hold was violated
class invariant_failure : public error {
public:
    using error::error;
};

} // namespace lhy
