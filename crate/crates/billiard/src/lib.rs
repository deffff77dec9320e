//! Scenes, commands and file output for the `billiard` tool.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod commands;
pub mod manifest;
pub mod output;
pub mod scene;
