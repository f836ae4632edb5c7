#![allow(dead_code)]

pub mod mult_oracle;
