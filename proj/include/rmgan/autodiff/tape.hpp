#pragma once

#include <functional>
#include <string>
#include <vector>

#include "rmgan/autodiff/tensor.hpp"

namespace rmgan::ad {

/// Ordered record of differentiable operations executed while the tape is
/// active on the current thread.
///
/// Operations are appended as they run, so the record is already in
/// topological order; backward() replays it in reverse, visiting each entry
/// exactly once. Gradients accumulate into leaf tensors (parameters) across
/// calls until the caller zeroes them.
class Tape {
public:
    struct Entry {
        const char* op;
        Tensor output;
        std::function<void()> backward;
    };

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;
    ~Tape();

    // The tape ops record onto, or nullptr when recording is off.
    static Tape* active();

    void record(const char* op, Tensor output, std::function<void()> backward);

    // Seeds d(loss)/d(loss) = 1 and runs every recorded backward rule in
    // reverse. The tape is cleared afterwards unless retain is set.
    void backward(const Tensor& loss, bool retain = false);

    void clear() { entries_.clear(); }
    std::size_t size() const { return entries_.size(); }
    const std::vector<Entry>& entries() const { return entries_; }

private:
    friend class TapeScope;
    std::vector<Entry> entries_;
};

/// Makes a tape the active recorder for the current thread for the lifetime
/// of the scope. Scopes nest; the previous recorder is restored on exit.
class TapeScope {
public:
    explicit TapeScope(Tape& tape);
    TapeScope(const TapeScope&) = delete;
    TapeScope& operator=(const TapeScope&) = delete;
    ~TapeScope();

private:
    Tape* previous_;
};

/// Suspends recording on the current thread.
class NoGradGuard {
public:
    NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;
    ~NoGradGuard();

private:
    Tape* previous_;
};

// True when an op producing a value from these inputs must be recorded.
bool should_record(std::initializer_list<const Tensor*> inputs);

}  // namespace rmgan::ad
