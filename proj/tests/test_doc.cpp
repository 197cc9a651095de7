#include "qhpc/doc.hpp"

#include <gtest/gtest.h>

#include "qhpc/errors.hpp"

namespace qhpc {
namespace {

TEST(Doc, NestedMapsAndScalars) {
  DocNode root = parse_document(
      "a: 1\n"
      "b:\n"
      "  c: two\n"
      "  d:\n"
      "    e: 3\n"
      "f: last\n");
  ASSERT_EQ(root.kind, DocNode::Kind::map);
  ASSERT_EQ(root.entries.size(), 3u);
  EXPECT_EQ(root.find("a")->scalar, "1");
  const DocNode* b = root.find("b");
  ASSERT_NE(b, nullptr);
  EXPECT_EQ(b->find("c")->scalar, "two");
  EXPECT_EQ(b->find("d")->find("e")->scalar, "3");
  EXPECT_EQ(root.find("f")->scalar, "last");
}

TEST(Doc, ScalarSequence) {
  DocNode root = parse_document("xs:\n  - one\n  - two\n  - three\n");
  const DocNode* xs = root.find("xs");
  ASSERT_EQ(xs->kind, DocNode::Kind::seq);
  ASSERT_EQ(xs->items.size(), 3u);
  EXPECT_EQ(xs->items[1].scalar, "two");
}

TEST(Doc, SequenceOfMaps) {
  DocNode root = parse_document(
      "rs:\n"
      "  - id: a\n"
      "    n: 1\n"
      "  - id: b\n"
      "    n: 2\n"
      "    sub:\n"
      "      k: v\n");
  const DocNode* rs = root.find("rs");
  ASSERT_EQ(rs->kind, DocNode::Kind::seq);
  ASSERT_EQ(rs->items.size(), 2u);
  EXPECT_EQ(rs->items[0].find("id")->scalar, "a");
  EXPECT_EQ(rs->items[1].find("n")->scalar, "2");
  EXPECT_EQ(rs->items[1].find("sub")->find("k")->scalar, "v");
}

TEST(Doc, CommentsAndBlanks) {
  DocNode root = parse_document(
      "# full line\n"
      "\n"
      "a: 1  # trailing\n"
      "   \n"
      "b: keeps#inner\n");
  EXPECT_EQ(root.find("a")->scalar, "1");
  EXPECT_EQ(root.find("b")->scalar, "keeps#inner");
}

TEST(Doc, CrlfNormalized) {
  DocNode root = parse_document("a: 1\r\nb: 2\r\n");
  EXPECT_EQ(root.find("b")->scalar, "2");
}

TEST(Doc, TabIndentRejectedWithPosition) {
  try {
    parse_document("a:\n\tb: 1\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line, 2);
    EXPECT_EQ(e.column, 1);
  }
}

TEST(Doc, DuplicateKeyRejected) {
  EXPECT_THROW(parse_document("a: 1\na: 2\n"), ParseError);
}

TEST(Doc, MissingSpaceAfterColon) {
  EXPECT_THROW(parse_document("a:1\n"), ParseError);
}

TEST(Doc, DanglingKeyRejected) {
  EXPECT_THROW(parse_document("a: 1\nb:\n"), ParseError);
}

TEST(Doc, InconsistentIndentRejected) {
  EXPECT_THROW(parse_document("m:\n  a: 1\n   b: 2\n"), ParseError);
}

TEST(Doc, RootSequenceRejected) {
  EXPECT_THROW(parse_document("- a\n- b\n"), ParseError);
}

TEST(Doc, IndentedTopLevelRejected) {
  EXPECT_THROW(parse_document("  a: 1\n"), ParseError);
}

TEST(Doc, ErrorCarriesLineAndColumn) {
  try {
    parse_document("ok: 1\nbroken line\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line, 2);
    EXPECT_GE(e.column, 1);
    EXPECT_FALSE(e.reason.empty());
  }
}

TEST(Doc, EmptyDocumentIsEmptyMap) {
  DocNode root = parse_document("# nothing but comments\n\n");
  EXPECT_EQ(root.kind, DocNode::Kind::map);
  EXPECT_TRUE(root.entries.empty());
}

TEST(Doc, Utf8BomSkipped) {
  DocNode root = parse_document("\xEF\xBB\xBF" "a: 1\n");
  EXPECT_EQ(root.find("a")->scalar, "1");
}

}  // namespace
}  // namespace qhpc
