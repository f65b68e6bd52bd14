#include "coastal/nn/graph.hpp"

#include <unordered_set>

namespace coastal::nn {

namespace {
thread_local bool t_grad_enabled = true;
}

bool grad_enabled() noexcept { return t_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(t_grad_enabled) { t_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { t_grad_enabled = previous_; }

template <class T>
void backward(const Var<T>& root, const Tensor<T>& seed) {
  if (!root.defined()) throw ConfigError("backward on an undefined variable");
  Node<T>* start = root.node().get();
  if (!start->requires_grad) return;

  // Iterative post-order DFS gives a topological order.
  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> visited;
  std::vector<std::pair<Node<T>*, std::size_t>> stack{{start, 0}};
  visited.insert(start);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node<T>* p = node->parents[next++].get();
      if (p->requires_grad && visited.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  Tensor<T>& g = start->grad_buffer();
  if (seed.empty()) {
    g.fill(T{1});
  } else {
    if (!(seed.shape() == g.shape())) throw ConsistencyError("backward seed shape mismatch");
    for (std::size_t k = 0; k < g.size(); ++k) g[k] += seed[k];
  }
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T>* node = *it;
    if (node->backward && !node->grad.empty()) node->backward(*node);
  }
}

template void backward<float>(const Var<float>&, const Tensor<float>&);
template void backward<double>(const Var<double>&, const Tensor<double>&);

}  // namespace coastal::nn
