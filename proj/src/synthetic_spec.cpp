#include "ctxf/synthetic_spec.hpp"

namespace ctxf::synthetic {

Spec default_spec() {
  return Spec{{
      {"berry", "rounded", "circle", "red", "dotted", "light"},
      {"sun", "rounded", "circle", "yellow", "uniform", "dark"},
      {"plum", "rounded", "circle", "purple", "uniform", "light"},
      {"moss", "rounded", "circle", "green", "dotted", "dark"},
      {"pearl", "rounded", "circle", "white", "striped", "dark"},
      {"crate", "angular", "square", "orange", "striped", "light"},
      {"tile", "angular", "square", "blue", "uniform", "dark"},
      {"peak", "angular", "triangle", "gray", "uniform", "light"},
      {"pine", "angular", "triangle", "green", "striped", "dark"},
      {"star", "angular", "cross", "yellow", "dotted", "light"},
  }};
}

ClassSpec target_only_class() {
  return {"clover", "angular", "cross", "green", "uniform", "dark"};
}

}  // namespace ctxf::synthetic
