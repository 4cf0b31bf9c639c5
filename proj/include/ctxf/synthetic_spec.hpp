#pragma once

#include <string>
#include <vector>

namespace ctxf::synthetic {

// Attribute sheet for one renderable class. The same four attributes drive
// both the image renderer and the synthetic knowledge graph, so the graph is
// ground truth for what the pixels show.
struct ClassSpec {
  std::string name;
  std::string supercategory;  // rounded | angular
  std::string shape;          // circle | square | triangle | cross
  std::string color;          // named color understood by the renderer
  std::string texture;        // dotted | striped | uniform
  std::string background;     // light | dark
};

struct Spec {
  std::vector<ClassSpec> classes;
};

// The ten bundled source classes: five rounded, five angular, with colors and
// textures arranged so that some pairs share several attributes and others
// none.
Spec default_spec();

// An eleventh class reserved for domain-shift experiments; never part of
// default_spec().
ClassSpec target_only_class();

}  // namespace ctxf::synthetic
