// Copyright 2026 The docrecon Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace docrecon {

// Bad or unreadable user input. The CLI maps this to exit status 1.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A document cannot host a task of the requested size. Dataset builders
// catch this and move on to the next document.
class InsufficientParagraphs : public InputError {
 public:
  using InputError::InputError;
};

// An internal contract was broken. The CLI maps this to exit status 2.
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace docrecon
