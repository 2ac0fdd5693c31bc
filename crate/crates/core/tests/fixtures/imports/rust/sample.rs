use std::collections::HashMap;
use serde::{Deserialize, Serialize};
pub use crate::config::Settings;
pub(crate) use super::util;
extern crate rand;
use ::regex::Regex;

fn main() {}
