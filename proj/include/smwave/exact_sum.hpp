#pragma once

#include <cmath>
#include <vector>

namespace smwave {

// Error-free accumulation of doubles (Shewchuk's expansion arithmetic, the
// algorithm behind Python's math.fsum). value() is the exact sum rounded once.
// Used where an identity must hold bit-for-bit, e.g. telescoped dyadic levels.
class ExactSum {
public:
    void add(double x) {
        std::size_t kept = 0;
        for (double y : partials_) {
            if (std::abs(x) < std::abs(y)) std::swap(x, y);
            const double hi = x + y;
            const double lo = y - (hi - x);
            if (lo != 0.0) partials_[kept++] = lo;
            x = hi;
        }
        partials_.resize(kept);
        partials_.push_back(x);
    }

    // Adds a - b without rounding the difference.
    void add_difference(double a, double b) {
        add(a);
        add(-b);
    }

    double value() const {
        if (partials_.empty()) return 0.0;
        auto n = partials_.size();
        double hi = partials_[--n];
        double lo = 0.0;
        while (n > 0) {
            const double x = hi;
            const double y = partials_[--n];
            hi = x + y;
            const double yr = hi - x;
            lo = y - yr;
            if (lo != 0.0) break;
        }
        // half-way correction, as in fsum
        if (n > 0 && ((lo < 0.0 && partials_[n - 1] < 0.0) || (lo > 0.0 && partials_[n - 1] > 0.0))) {
            const double y = lo * 2.0;
            const double x = hi + y;
            if (y == x - hi) hi = x;
        }
        return hi;
    }

private:
    std::vector<double> partials_;
};

} // namespace smwave
