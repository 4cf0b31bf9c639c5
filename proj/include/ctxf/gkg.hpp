#pragma once

#include "ctxf/kg.hpp"
#include "ctxf/synthetic_spec.hpp"

namespace ctxf::kg {

// The bundled CIFAR-style generic knowledge graph: 10 dataset classes plus a
// two-rooted taxonomy (living things and artifacts), visual attributes, and
// functional attributes. Totals: 34 distinct class terms, 16 properties,
// 65 individuals.
KnowledgeGraph build_cifar_gkg();

// Graph derived from a synthetic dataset spec: one triple per class attribute
// (shape, color, texture, background) plus class -> supercategory -> Object
// taxonomy edges.
KnowledgeGraph build_synthetic_gkg(const synthetic::Spec& spec);

}  // namespace ctxf::kg
