// tests/test_textnorm.cc

#include "clsw/common.h"
#include "clsw/textnorm.h"
#include "doctest.h"

using namespace clsw;

TEST_CASE("english normalization strips punctuation, lowercases, spells digits") {
  CHECK(NormalizeText("Hello, World! 2", "en") == "hello world two");
  CHECK(NormalizeText("", "en") == "");
  CHECK(NormalizeText("  A  B  ", "en") == "a b");
  CHECK(NormalizeText("it's 42!", "en") == "its forty two");
  CHECK(NormalizeText("year 1999.", "en") == "year one thousand nine hundred ninety nine");
}

TEST_CASE("devanagari danda is removed and hindi digits expand") {
  CHECK(NormalizeText("क्या।", "hi") == "क्या");
  CHECK(NormalizeText("॥ शांति ॥", "hi") == "शांति");
  CHECK(NormalizeText("2", "hi") == "दो");
  CHECK(NormalizeText("२", "hi") == "दो");  // Devanagari digit
  CHECK(NormalizeText("९९", "hi") == "निन्यानवे");
}

TEST_CASE("english number speller covers the documented range") {
  CHECK(SpellNumber(0, "en") == "zero");
  CHECK(SpellNumber(13, "en") == "thirteen");
  CHECK(SpellNumber(40, "en") == "forty");
  CHECK(SpellNumber(100, "en") == "one hundred");
  CHECK(SpellNumber(205, "en") == "two hundred five");
  CHECK(SpellNumber(999999, "en") ==
        "nine hundred ninety nine thousand nine hundred ninety nine");
  CHECK(SpellNumber(123456, "en") ==
        "one hundred twenty three thousand four hundred fifty six");
  CHECK_THROWS_AS(SpellNumber(1000000, "en"), Error);
}

TEST_CASE("hindi number speller composes lakh/hazar/sau") {
  CHECK(SpellNumber(0, "hi") == "शून्य");
  CHECK(SpellNumber(21, "hi") == "इक्कीस");
  CHECK(SpellNumber(100, "hi") == "एक सौ");
  CHECK(SpellNumber(2500, "hi") == "दो हज़ार पाँच सौ");
  CHECK(SpellNumber(100000, "hi") == "एक लाख");
  CHECK(SpellNumber(123456, "hi") == "एक लाख तेईस हज़ार चार सौ छप्पन");
}

TEST_CASE("unsupported language keeps digits verbatim with a warning") {
  CHECK(!HasNumberSpeller("ta"));
  CHECK(NormalizeText("abc 42", "ta") == "abc 42");
}

TEST_CASE("normalization is idempotent") {
  const char* samples[] = {"Hello, World! 2", "क्या। 12 ॥", "Mixed-Case TEXT 7"};
  for (const char* s : samples) {
    const std::string once = NormalizeText(s, "en");
    CHECK(NormalizeText(once, "en") == once);
  }
}
