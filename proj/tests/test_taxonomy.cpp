#include "doctest.h"
#include "stargen/taxonomy.hpp"
#include "stargen/util.hpp"
#include "support.hpp"

using namespace stargen;
using stargen::testing::random_category;
using stargen::testing::random_delta;

namespace {

BaseTask task(std::string id, std::string instruction) {
  BaseTask b;
  b.id = std::move(id);
  b.instruction = std::move(instruction);
  b.scene.image = "scenes/kitchen.jpg";
  b.scene.objects = {{"carrot", {{"color", "orange"}}}, {"apple", {{"color", "red"}}}};
  return b;
}

PerturbationDelta instruction_delta(std::string instr, std::string factor = "referencing color") {
  PerturbationDelta d;
  d.instruction = std::move(instr);
  d.factor = std::move(factor);
  return d;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::IoError;
}

}  // namespace

TEST_CASE("category labels and canonical order") {
  std::vector<std::string> labels;
  for (auto c : Category::all()) labels.push_back(c.label());
  CHECK(labels == std::vector<std::string>{"V", "S", "B", "VB", "SB", "VS", "VSB"});
  CHECK(Category::from_label("SV") == std::nullopt);
  CHECK(Category::from_label("") == std::nullopt);
  CHECK(Category::from_label("VSB")->set_string() == "{V,S,B}");
  CHECK(Category::from_bits(0) == std::nullopt);
  CHECK_THROWS_AS(Category::of({}), Error);
}

TEST_CASE("categorize: the orange object depends on the base task") {
  auto carrot = task("carrot", "pick up carrot");
  auto apple = task("apple", "pick up apple");
  CHECK(categorize(carrot, instruction_delta("pick up the orange object")).label() == "S");

  auto d = instruction_delta("pick up the orange object");
  d.behavioral = ChangeNote{"now grasps carrot"};
  CHECK(categorize(apple, d).label() == "SB");
}

TEST_CASE("categorize: new object changes all three") {
  auto b = task("carrot", "put carrot on plate");
  PerturbationDelta d;
  d.visual = ChangeNote{"replace carrot with zucchini"};
  d.instruction = "put zucchini on plate";
  d.behavioral = ChangeNote{"grasp the zucchini"};
  d.factor = "new object";
  CHECK(categorize(b, d).label() == "VSB");
}

TEST_CASE("categorize errors") {
  auto b = task("carrot", "put carrot on plate");
  CHECK(code_of([&] { categorize(b, PerturbationDelta{.factor = "nothing"}); }) == ErrorCode::EmptyDelta);
  CHECK(code_of([&] { categorize(b, instruction_delta("  put   carrot on\tplate ")); }) ==
        ErrorCode::NoOpInstruction);
  // case is significant
  CHECK(categorize(b, instruction_delta("Put carrot on plate")).label() == "S");
  // a one-letter typo is a semantic change
  auto knife = task("knife", "put knife on plate");
  CHECK(categorize(knife, instruction_delta("put knif on plate", "typo")).label() == "S");
  CHECK(code_of([&] { categorize(b, instruction_delta("grab carrot", "")); }) == ErrorCode::InvalidDelta);
  CHECK(code_of([&] { categorize(b, instruction_delta("grab carrot", "color + verb")); }) ==
        ErrorCode::InvalidDelta);
  PerturbationDelta empty_visual{.visual = ChangeNote{"  "}, .factor = "x"};
  CHECK(code_of([&] { categorize(b, empty_visual); }) == ErrorCode::InvalidDelta);
}

TEST_CASE("compose examples and laws") {
  auto S = *Category::from_label("S");
  auto V = *Category::from_label("V");
  auto VB = *Category::from_label("VB");
  std::vector<Category> ss{S, S}, vv{V, V}, vbvb{VB, VB};
  CHECK(compose(ss) == S);
  CHECK(compose(vv) == V);
  CHECK(compose(vbvb) == VB);
  CHECK_THROWS_AS(compose(std::span<const Category>{}), std::invalid_argument);

  std::mt19937 rng(7);
  for (int i = 0; i < 500; ++i) {
    auto a = random_category(rng), b = random_category(rng), c = random_category(rng);
    std::vector<Category> ab{a, b}, ba{b, a}, aa{a, a};
    CHECK(compose(ab) == compose(ba));
    CHECK(((a | b) | c) == (a | (b | c)));
    CHECK(compose(aa) == a);
  }
}

TEST_CASE("union law over randomized composites") {
  std::mt19937 rng(1234);
  auto base = task("base", "put carrot on plate");
  for (int i = 0; i < 1000; ++i) {
    CompositeCondition k;
    k.id = "k";
    k.base_task = base.id;
    std::uint8_t expected = 0;
    int parts = 2 + rng() % 3;
    for (int p = 0; p < parts; ++p) {
      Category c = random_category(rng);
      expected |= c.bits();
      auto d = random_delta(rng, base, c);
      CHECK(categorize(base, d) == c);
      k.parts.push_back({"X-" + std::to_string(p), d});
    }
    Category derived = derived_category(base, k);
    CHECK(derived.bits() == expected);
    CHECK(derived.size() >= 1);
  }
}

TEST_CASE("normalization is idempotent and categorize is invariant under it") {
  std::mt19937 rng(99);
  for (const char* s : {"", "  a  b ", "\t\nx\n", "a", " ★  é "}) {
    auto once = normalize_whitespace(s);
    CHECK(normalize_whitespace(once) == once);
  }
  auto base = task("b", "  put carrot   on plate ");
  auto norm_base = base;
  norm_base.instruction = normalize_whitespace(base.instruction);
  for (int i = 0; i < 200; ++i) {
    auto c = random_category(rng);
    auto d = random_delta(rng, base, c);
    auto nd = d;
    if (nd.instruction) nd.instruction = normalize_whitespace(*nd.instruction);
    CHECK(categorize(base, d) == categorize(norm_base, nd));
  }
}

TEST_CASE("axis lookup") {
  const auto& prop = axis_lookup("S-PROP");
  CHECK(prop.name == "Object Properties");
  CHECK(prop.category.label() == "S");
  CHECK(axis_lookup("VSB-NOBJ").category.label() == "VSB");
  CHECK(code_of([] { axis_lookup("X-FOO"); }) == ErrorCode::UnknownAxis);
  for (const auto& a : AxisRegistry::canonical().axes()) CHECK(a.prefix() == a.category.label());
}

TEST_CASE("registry selfcheck") {
  auto r = registry_selfcheck();
  CHECK(r.total == 22);
  CHECK(r.canonical == 22);
  CHECK(r.categories == 7);
  CHECK(r.counts_by_label == std::map<std::string, std::size_t>{
                                 {"V", 4}, {"S", 5}, {"B", 2}, {"VB", 5}, {"SB", 4}, {"VS", 1}, {"VSB", 1}});

  auto custom = AxisRegistry::canonical().with_custom(
      {"SB-CUSTOM", "Custom", *Category::from_label("SB"), "a custom axis", {}, true});
  auto rc = custom.selfcheck();
  CHECK(rc.total == 23);
  CHECK(rc.canonical == 22);
  CHECK(rc.custom_axes == std::vector<std::string>{"SB-CUSTOM"});
  CHECK_FALSE(custom.lookup("SB-CUSTOM").canonical);

  auto bad = AxisRegistry::canonical().with_custom(
      {"V-BAD", "Bad", *Category::from_label("S"), "", {}, true});
  CHECK(code_of([&] { bad.selfcheck(); }) == ErrorCode::RegistryCorrupt);
  CHECK(code_of([&] { custom.with_custom(custom.lookup("SB-CUSTOM")); }) == ErrorCode::DuplicateId);
}

TEST_CASE("validate_condition") {
  const auto& reg = AxisRegistry::canonical();
  auto b = task("carrot_base", "put carrot on plate");
  Condition c{"carrot_color", "carrot_base", "S-PROP", instruction_delta("put the orange object on the plate"), "", ""};
  CHECK_FALSE(validate_condition(reg, b, c).has_value());

  c.axis = "V-SC";
  auto d = validate_condition(reg, b, c);
  REQUIRE(d.has_value());
  CHECK(d->code == ErrorCode::CategoryMismatch);
  CHECK(d->subject == "carrot_color");
  CHECK(d->message.find("expected {V} got {S}") != std::string::npos);

  Condition pose{"carrot_farther", "carrot_base", "VB-POSE",
                 {.visual = ChangeNote{"carrot farther"}, .behavioral = ChangeNote{"longer reach"}, .factor = "position"},
                 "", ""};
  CHECK_FALSE(validate_condition(reg, b, pose).has_value());

  c.axis = "X-FOO";
  CHECK(validate_condition(reg, b, c)->code == ErrorCode::UnknownAxis);
}

TEST_CASE("validate_composite rules") {
  const auto& reg = AxisRegistry::canonical();
  auto b = task("carrot_base", "put carrot on plate");
  CompositeCondition k;
  k.id = "k";
  k.base_task = b.id;
  k.parts = {{"S-PROP", instruction_delta("put the orange object on the plate")}};
  CHECK_FALSE(validate_composite(reg, b, k).empty());  // one part

  k.parts.push_back({"S-LANG", instruction_delta("lift carrot and place on plate", "verbs")});
  k.effective_instruction = "lift the orange object and place on plate";
  CHECK(validate_composite(reg, b, k).empty());
  CHECK(k.signature() == "S-PROP+S-LANG");

  k.effective_instruction = "put carrot on plate";
  CHECK_FALSE(validate_composite(reg, b, k).empty());  // no-op effective instruction

  k.effective_instruction.reset();
  k.parts[1] = k.parts[0];
  CHECK_FALSE(validate_composite(reg, b, k).empty());  // repeated axis and factor

  CompositeCondition v;
  v.id = "v";
  v.base_task = b.id;
  v.parts = {{"V-SC", {.visual = ChangeNote{"distractors"}, .factor = "distractors"}},
             {"V-OBJ", {.visual = ChangeNote{"orange plate"}, .factor = "plate color"}}};
  CHECK(validate_composite(reg, b, v).empty());
  v.effective_instruction = "put carrot on the orange plate";
  CHECK_FALSE(validate_composite(reg, b, v).empty());  // no part changes the instruction
}

TEST_CASE("util formatting") {
  CHECK(format_percent(3, 5) == "60.0%");
  CHECK(format_percent(1, 3) == "33.3%");
  CHECK(format_percent(2, 3) == "66.7%");
  CHECK(format_percent(1, 8) == "12.5%");
  CHECK(format_percent(1, 16) == "6.3%");  // 6.25 rounds half-up
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(base64_encode(std::string_view("hello")) == "aGVsbG8=");
  auto t = parse_rfc3339("2025-02-03T10:01:00+01:00");
  CHECK(format_rfc3339(t) == "2025-02-03T09:01:00Z");
  CHECK(format_rfc3339(parse_rfc3339("2025-02-03T09:01:00.75Z")) == "2025-02-03T09:01:00Z");
  CHECK_THROWS_AS(parse_rfc3339("2025-02-03 09:01:00"), std::invalid_argument);
}
