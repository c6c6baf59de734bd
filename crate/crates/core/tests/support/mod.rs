#![allow(dead_code)]

pub mod geweke;
