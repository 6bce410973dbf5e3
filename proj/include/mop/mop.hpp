// mop/mop.hpp

// Copyright 2026 The mop Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// Umbrella header.

#ifndef MOP_MOP_HPP_
#define MOP_MOP_HPP_

#include "mop/errors.hpp"
#include "mop/core.hpp"
#include "mop/alignment.hpp"
#include "mop/training.hpp"
#include "mop/decoder.hpp"
#include "mop/controller.hpp"
#include "mop/oracle.hpp"
#include "mop/io_formats.hpp"
#include "mop/session.hpp"
#include "mop/transport.hpp"

#endif  // MOP_MOP_HPP_
