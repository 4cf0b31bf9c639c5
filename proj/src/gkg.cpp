#include "ctxf/gkg.hpp"

#include <stdexcept>

namespace ctxf::kg {
namespace {

struct Row {
  const char* subject;
  const char* property;
  const char* object;  // individual unless property == "type"
};

// One line per triple, grouped by class. Attribute values follow the
// published exemplars (air/forest/water backgrounds, black/blue/brown colors,
// eyes/legs/wings parts, rectangular/ellipsoid/cross shapes, dotted/striped/
// uniform textures, drive/fly/swim movements, bark/meow/vroom sounds,
// fast/medium/slow speeds, heavy/light/middle weights), extended with enough
// further attributes to describe all ten classes.
constexpr Row kCifarRows[] = {
    // airplane
    {"airplane", "hasBackground", "air"},
    {"airplane", "hasColor", "white"},
    {"airplane", "hasColor", "gray"},
    {"airplane", "hasPart", "wings"},
    {"airplane", "hasPart", "engine"},
    {"airplane", "hasPart", "tail"},
    {"airplane", "hasShape", "cross"},
    {"airplane", "hasSize", "large"},
    {"airplane", "hasTexture", "uniform"},
    {"airplane", "hasCovering", "metal"},
    {"airplane", "hasLegCount", "no_legs"},
    {"airplane", "hasMovement", "fly"},
    {"airplane", "hasSound", "vroom"},
    {"airplane", "hasSpeed", "fast"},
    {"airplane", "hasWeight", "heavy"},
    {"airplane", "hasTransportation", "people"},
    {"airplane", "hasTransportation", "goods"},
    {"airplane", "type", "AirVehicle"},
    {"airplane", "type", "Vehicle"},
    // automobile
    {"automobile", "hasBackground", "road"},
    {"automobile", "hasColor", "red"},
    {"automobile", "hasColor", "blue"},
    {"automobile", "hasColor", "black"},
    {"automobile", "hasPart", "wheels"},
    {"automobile", "hasPart", "engine"},
    {"automobile", "hasShape", "rectangular"},
    {"automobile", "hasSize", "medium"},
    {"automobile", "hasTexture", "uniform"},
    {"automobile", "hasCovering", "metal"},
    {"automobile", "hasLegCount", "no_legs"},
    {"automobile", "hasMovement", "drive"},
    {"automobile", "hasSound", "vroom"},
    {"automobile", "hasSpeed", "fast"},
    {"automobile", "hasWeight", "middle"},
    {"automobile", "hasTransportation", "people"},
    {"automobile", "type", "MotorVehicle"},
    {"automobile", "type", "LandVehicle"},
    {"automobile", "type", "Vehicle"},
    {"automobile", "type", "PassengerVehicle"},
    // bird
    {"bird", "hasBackground", "air"},
    {"bird", "hasBackground", "forest"},
    {"bird", "hasColor", "brown"},
    {"bird", "hasColor", "blue"},
    {"bird", "hasPart", "wings"},
    {"bird", "hasPart", "beak"},
    {"bird", "hasPart", "tail"},
    {"bird", "hasPart", "legs"},
    {"bird", "hasPart", "eyes"},
    {"bird", "hasShape", "ellipsoid"},
    {"bird", "hasSize", "tiny"},
    {"bird", "hasTexture", "dotted"},
    {"bird", "hasCovering", "feathers"},
    {"bird", "hasLegCount", "two_legs"},
    {"bird", "hasMovement", "fly"},
    {"bird", "hasSound", "chirp"},
    {"bird", "hasSpeed", "fast"},
    {"bird", "hasWeight", "light"},
    {"bird", "hasDiet", "omnivore"},
    {"bird", "hasHabitat", "wild_habitat"},
    {"bird", "type", "FlyingAnimal"},
    {"bird", "type", "Animal"},
    {"bird", "type", "WildAnimal"},
    // cat
    {"cat", "hasBackground", "grass"},
    {"cat", "hasColor", "black"},
    {"cat", "hasColor", "white"},
    {"cat", "hasColor", "gray"},
    {"cat", "hasPart", "whiskers"},
    {"cat", "hasPart", "tail"},
    {"cat", "hasPart", "legs"},
    {"cat", "hasPart", "eyes"},
    {"cat", "hasShape", "ellipsoid"},
    {"cat", "hasSize", "small"},
    {"cat", "hasTexture", "striped"},
    {"cat", "hasCovering", "fur"},
    {"cat", "hasLegCount", "four_legs"},
    {"cat", "hasMovement", "walk"},
    {"cat", "hasMovement", "run"},
    {"cat", "hasSound", "meow"},
    {"cat", "hasSpeed", "medium"},
    {"cat", "hasWeight", "light"},
    {"cat", "hasDiet", "carnivore"},
    {"cat", "hasHabitat", "domestic_habitat"},
    {"cat", "type", "Feline"},
    {"cat", "type", "Mammal"},
    {"cat", "type", "Animal"},
    {"cat", "type", "DomesticAnimal"},
    // deer
    {"deer", "hasBackground", "forest"},
    {"deer", "hasBackground", "grass"},
    {"deer", "hasColor", "brown"},
    {"deer", "hasPart", "antlers"},
    {"deer", "hasPart", "hooves"},
    {"deer", "hasPart", "tail"},
    {"deer", "hasPart", "legs"},
    {"deer", "hasPart", "eyes"},
    {"deer", "hasShape", "ellipsoid"},
    {"deer", "hasSize", "medium"},
    {"deer", "hasTexture", "dotted"},
    {"deer", "hasCovering", "fur"},
    {"deer", "hasLegCount", "four_legs"},
    {"deer", "hasMovement", "run"},
    {"deer", "hasSpeed", "fast"},
    {"deer", "hasWeight", "middle"},
    {"deer", "hasDiet", "herbivore"},
    {"deer", "hasHabitat", "wild_habitat"},
    {"deer", "type", "Cervid"},
    {"deer", "type", "Ungulate"},
    {"deer", "type", "Mammal"},
    {"deer", "type", "Animal"},
    {"deer", "type", "WildAnimal"},
    // dog
    {"dog", "hasBackground", "grass"},
    {"dog", "hasBackground", "road"},
    {"dog", "hasColor", "brown"},
    {"dog", "hasColor", "black"},
    {"dog", "hasColor", "white"},
    {"dog", "hasPart", "tail"},
    {"dog", "hasPart", "legs"},
    {"dog", "hasPart", "whiskers"},
    {"dog", "hasPart", "eyes"},
    {"dog", "hasShape", "ellipsoid"},
    {"dog", "hasSize", "medium"},
    {"dog", "hasTexture", "uniform"},
    {"dog", "hasCovering", "fur"},
    {"dog", "hasLegCount", "four_legs"},
    {"dog", "hasMovement", "run"},
    {"dog", "hasMovement", "walk"},
    {"dog", "hasSound", "bark"},
    {"dog", "hasSpeed", "medium"},
    {"dog", "hasWeight", "middle"},
    {"dog", "hasDiet", "carnivore"},
    {"dog", "hasHabitat", "domestic_habitat"},
    {"dog", "type", "Canine"},
    {"dog", "type", "Mammal"},
    {"dog", "type", "Animal"},
    {"dog", "type", "DomesticAnimal"},
    // frog
    {"frog", "hasBackground", "water"},
    {"frog", "hasBackground", "grass"},
    {"frog", "hasColor", "green"},
    {"frog", "hasPart", "legs"},
    {"frog", "hasPart", "eyes"},
    {"frog", "hasShape", "ellipsoid"},
    {"frog", "hasSize", "tiny"},
    {"frog", "hasTexture", "dotted"},
    {"frog", "hasCovering", "skin"},
    {"frog", "hasLegCount", "four_legs"},
    {"frog", "hasMovement", "swim"},
    {"frog", "hasSound", "croak"},
    {"frog", "hasSpeed", "slow"},
    {"frog", "hasWeight", "light"},
    {"frog", "hasDiet", "carnivore"},
    {"frog", "hasHabitat", "wild_habitat"},
    {"frog", "type", "Amphibian"},
    {"frog", "type", "Animal"},
    {"frog", "type", "WildAnimal"},
    // horse
    {"horse", "hasBackground", "grass"},
    {"horse", "hasColor", "brown"},
    {"horse", "hasColor", "black"},
    {"horse", "hasColor", "white"},
    {"horse", "hasPart", "hooves"},
    {"horse", "hasPart", "tail"},
    {"horse", "hasPart", "legs"},
    {"horse", "hasPart", "eyes"},
    {"horse", "hasShape", "ellipsoid"},
    {"horse", "hasSize", "large"},
    {"horse", "hasTexture", "uniform"},
    {"horse", "hasCovering", "fur"},
    {"horse", "hasLegCount", "four_legs"},
    {"horse", "hasMovement", "run"},
    {"horse", "hasMovement", "walk"},
    {"horse", "hasSound", "neigh"},
    {"horse", "hasSpeed", "fast"},
    {"horse", "hasWeight", "heavy"},
    {"horse", "hasDiet", "herbivore"},
    {"horse", "hasHabitat", "farm_habitat"},
    {"horse", "type", "Equine"},
    {"horse", "type", "Ungulate"},
    {"horse", "type", "Mammal"},
    {"horse", "type", "Animal"},
    {"horse", "type", "FarmAnimal"},
    // ship
    {"ship", "hasBackground", "water"},
    {"ship", "hasColor", "white"},
    {"ship", "hasColor", "gray"},
    {"ship", "hasColor", "blue"},
    {"ship", "hasPart", "engine"},
    {"ship", "hasShape", "streamlined"},
    {"ship", "hasSize", "large"},
    {"ship", "hasTexture", "metallic"},
    {"ship", "hasCovering", "metal"},
    {"ship", "hasLegCount", "no_legs"},
    {"ship", "hasMovement", "swim"},
    {"ship", "hasSound", "vroom"},
    {"ship", "hasSpeed", "slow"},
    {"ship", "hasWeight", "heavy"},
    {"ship", "hasTransportation", "people"},
    {"ship", "hasTransportation", "goods"},
    {"ship", "type", "WaterVehicle"},
    {"ship", "type", "Vehicle"},
    // truck
    {"truck", "hasBackground", "road"},
    {"truck", "hasColor", "red"},
    {"truck", "hasColor", "gray"},
    {"truck", "hasPart", "wheels"},
    {"truck", "hasPart", "engine"},
    {"truck", "hasShape", "rectangular"},
    {"truck", "hasSize", "large"},
    {"truck", "hasTexture", "metallic"},
    {"truck", "hasCovering", "metal"},
    {"truck", "hasLegCount", "no_legs"},
    {"truck", "hasMovement", "drive"},
    {"truck", "hasSound", "vroom"},
    {"truck", "hasSpeed", "medium"},
    {"truck", "hasWeight", "heavy"},
    {"truck", "hasTransportation", "goods"},
    {"truck", "type", "MotorVehicle"},
    {"truck", "type", "LandVehicle"},
    {"truck", "type", "Vehicle"},
    {"truck", "type", "CargoVehicle"},
    // monkey: a non-dataset class present only in the taxonomy, as a reminder
    // that the graph covers more classes than the dataset does
    {"monkey", "type", "Primate"},
    {"monkey", "type", "Mammal"},
    {"monkey", "type", "Animal"},
    {"monkey", "type", "WildAnimal"},
    // taxonomy-concept chains (two disjoint trees: living things, artifacts)
    {"Mammal", "type", "Animal"},
    {"Amphibian", "type", "Animal"},
    {"FlyingAnimal", "type", "Animal"},
    {"Primate", "type", "Mammal"},
    {"Feline", "type", "Mammal"},
    {"Canine", "type", "Mammal"},
    {"Ungulate", "type", "Mammal"},
    {"Equine", "type", "Ungulate"},
    {"Cervid", "type", "Ungulate"},
    {"Animal", "type", "LivingThing"},
    {"DomesticAnimal", "type", "Animal"},
    {"WildAnimal", "type", "Animal"},
    {"FarmAnimal", "type", "DomesticAnimal"},
    {"Machine", "type", "Artifact"},
    {"Vehicle", "type", "Machine"},
    {"MotorVehicle", "type", "Vehicle"},
    {"WaterVehicle", "type", "Vehicle"},
    {"LandVehicle", "type", "Vehicle"},
    {"AirVehicle", "type", "Vehicle"},
    {"PassengerVehicle", "type", "Vehicle"},
    {"CargoVehicle", "type", "Vehicle"},
};

}  // namespace

KnowledgeGraph build_cifar_gkg() {
  KnowledgeGraph g;
  g.set_classes({"airplane", "automobile", "bird", "cat", "deer", "dog", "frog", "horse", "ship",
                 "truck"});
  for (const Row& r : kCifarRows) {
    std::string property = r.property;
    Term tail = property == "type" ? cls(r.object) : ind(r.object);
    g.add(cls(r.subject), property, tail);
  }
  g.validate();
  return g;
}

KnowledgeGraph build_synthetic_gkg(const synthetic::Spec& spec) {
  if (spec.classes.empty()) throw std::invalid_argument("synthetic spec has no classes");
  KnowledgeGraph g;
  std::vector<std::string> names;
  for (const synthetic::ClassSpec& c : spec.classes) names.push_back(c.name);
  g.set_classes(std::move(names));
  for (const synthetic::ClassSpec& c : spec.classes) {
    if (c.name.empty() || c.supercategory.empty() || c.shape.empty() || c.color.empty() ||
        c.texture.empty() || c.background.empty())
      throw std::invalid_argument("synthetic class '" + c.name + "' has a missing attribute");
    g.add(cls(c.name), "hasShape", ind(c.shape));
    g.add(cls(c.name), "hasColor", ind(c.color));
    g.add(cls(c.name), "hasTexture", ind(c.texture));
    g.add(cls(c.name), "hasBackground", ind(c.background));
    g.add(cls(c.name), "type", cls(c.supercategory));
    g.add(cls(c.supercategory), "type", cls("Object"));
  }
  g.validate();
  return g;
}

}  // namespace ctxf::kg
