#include "rmgan/autodiff/tape.hpp"

#include "rmgan/common/error.hpp"

namespace rmgan::ad {

namespace {
thread_local Tape* g_active = nullptr;
}

Tape::~Tape() {
    if (g_active == this) {
        g_active = nullptr;
    }
}

Tape* Tape::active() { return g_active; }

void Tape::record(const char* op, Tensor output, std::function<void()> backward) {
    entries_.push_back(Entry{op, std::move(output), std::move(backward)});
}

void Tape::backward(const Tensor& loss, bool retain) {
    if (loss.rank() != 0) {
        throw Error(ErrorCode::non_scalar_loss, "backward needs a scalar loss, got shape " +
                                                    shape_to_string(loss.shape()));
    }
    if (entries_.empty()) {
        throw Error(ErrorCode::invalid_argument, "backward on an empty tape");
    }
    // Intermediate gradients restart from zero so a retained tape replays
    // exactly; leaf gradients keep accumulating.
    for (auto& entry : entries_) {
        entry.output.zero_grad();
    }
    Tensor seed = loss;
    seed.grad_buffer()[0] += 1.0;
    for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
        // Outputs nothing downstream depended on carry no gradient.
        if (it->output.has_grad()) {
            it->backward();
        }
    }
    if (!retain) {
        entries_.clear();
    }
}

TapeScope::TapeScope(Tape& tape) : previous_(g_active) { g_active = &tape; }

TapeScope::~TapeScope() { g_active = previous_; }

NoGradGuard::NoGradGuard() : previous_(g_active) { g_active = nullptr; }

NoGradGuard::~NoGradGuard() { g_active = previous_; }

bool should_record(std::initializer_list<const Tensor*> inputs) {
    if (g_active == nullptr) {
        return false;
    }
    for (const Tensor* t : inputs) {
        if (t != nullptr && t->requires_grad()) {
            return true;
        }
    }
    return false;
}

}  // namespace rmgan::ad
