// Copyright 2026-present the troupe authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <sstream>

#include "troupe/kv/types.hpp"

namespace troupe::kv {

int compare(const AttributeValue& a, const AttributeValue& b) {
  if (a.index() != b.index()) {
    throw Error(ErrorCode::TypeMismatch,
                "ordered comparison across attribute types");
  }
  return std::visit(
      [&](const auto& lhs) -> int {
        const auto& rhs = std::get<std::decay_t<decltype(lhs)>>(b);
        if (lhs < rhs) return -1;
        if (rhs < lhs) return 1;
        return 0;
      },
      a);
}

bool loose_equals(const AttributeValue& a, const AttributeValue& b) {
  if (a.index() != b.index()) return false;
  return compare(a, b) == 0;
}

std::string to_display(const AttributeValue& v) {
  struct Visitor {
    std::string operator()(const std::string& s) const { return s; }
    std::string operator()(int64_t i) const { return std::to_string(i); }
    std::string operator()(bool b) const { return b ? "true" : "false"; }
    std::string operator()(const Bytes& b) const {
      return "bytes[" + std::to_string(b.data.size()) + "]";
    }
  };
  return std::visit(Visitor{}, v);
}

bool KeyLess::operator()(const AttributeValue& a, const AttributeValue& b) const {
  if (a.index() != b.index()) return a.index() < b.index();
  return compare(a, b) < 0;
}

bool KeyLess::operator()(const Key& a, const Key& b) const {
  if ((*this)(a.partition, b.partition)) return true;
  if ((*this)(b.partition, a.partition)) return false;
  if (!a.sort && !b.sort) return false;
  if (!a.sort) return true;
  if (!b.sort) return false;
  return (*this)(*a.sort, *b.sort);
}

Condition Condition::exists() {
  Condition c;
  c.kind_ = Kind::Exists;
  return c;
}

Condition Condition::not_exists() {
  Condition c;
  c.kind_ = Kind::NotExists;
  return c;
}

Condition Condition::equals(std::string attribute, AttributeValue value) {
  Condition c;
  c.kind_ = Kind::Equals;
  c.attribute_ = std::move(attribute);
  c.value_ = std::move(value);
  return c;
}

Condition Condition::all_of(std::vector<Condition> parts) {
  Condition c;
  c.kind_ = Kind::And;
  c.parts_ = std::move(parts);
  return c;
}

bool Condition::evaluate(const Item* item) const {
  switch (kind_) {
    case Kind::Exists:
      return item != nullptr;
    case Kind::NotExists:
      return item == nullptr;
    case Kind::Equals: {
      if (item == nullptr) return false;
      auto it = item->attrs.find(attribute_);
      if (it == item->attrs.end()) return false;
      return loose_equals(it->second, value_);
    }
    case Kind::And: {
      for (const auto& p : parts_) {
        if (!p.evaluate(item)) return false;
      }
      return true;
    }
  }
  return false;
}

std::string Condition::to_display() const {
  switch (kind_) {
    case Kind::Exists:
      return "exists";
    case Kind::NotExists:
      return "not_exists";
    case Kind::Equals:
      return attribute_ + "==" + kv::to_display(value_);
    case Kind::And: {
      std::ostringstream os;
      os << "and(";
      for (size_t i = 0; i < parts_.size(); ++i) {
        if (i) os << ",";
        os << parts_[i].to_display();
      }
      os << ")";
      return os.str();
    }
  }
  return "?";
}

}  // namespace troupe::kv
