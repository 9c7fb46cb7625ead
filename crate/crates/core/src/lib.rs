// Copyright (c) The photonlab Authors
// SPDX-License-Identifier: Apache-2.0

pub mod cli;
pub mod elements;
pub mod engine;
pub mod entanglement;
pub mod io;
pub mod photon;
pub mod serve;
pub mod tensor;
