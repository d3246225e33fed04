//! Worked example data shipped with the crate: the cost tables of the
//! twenty-node and seven-node examples and the four-user fold example.

use crate::error::Result;
use crate::instance::{parse_instance_json, Instance};
use crate::tree::{load_cost_tree, PartitionTree};
use crate::weber::Point;

pub const TABLE4_JSON: &str = include_str!("../../../fixtures/paper_table4.json");
pub const TABLE3_A_JSON: &str = include_str!("../../../fixtures/paper_table3_a.json");
pub const TABLE3_B_JSON: &str = include_str!("../../../fixtures/paper_table3_b.json");
pub const TABLE1_JSON: &str = include_str!("../../../fixtures/paper_table1.json");

/// Final labels `(k, F_k)` of the twenty-node example.
pub const TABLE4_FINAL: [(u64, f64); 31] = [
    (1, 248.0),
    (2, 119.0),
    (3, 129.0),
    (4, 64.0),
    (5, 55.0),
    (6, 60.0),
    (7, 69.0),
    (8, 32.0),
    (9, 32.0),
    (10, 30.0),
    (11, 33.0),
    (14, 36.0),
    (15, 33.0),
    (16, 15.0),
    (17, 17.0),
    (18, 19.0),
    (19, 13.0),
    (28, 18.0),
    (29, 19.0),
    (30, 16.0),
    (31, 17.0),
    (32, 7.0),
    (33, 9.0),
    (38, 5.0),
    (39, 8.0),
    (58, 8.0),
    (59, 11.0),
    (62, 7.0),
    (63, 10.0),
    (76, 2.0),
    (77, 3.0),
];

pub const TABLE4_FLAGGED: [u64; 20] =
    [5, 6, 10, 11, 14, 16, 17, 18, 19, 28, 30, 32, 33, 39, 58, 59, 62, 63, 76, 77];

pub const TABLE4_FRONTIER: [u64; 10] = [5, 6, 14, 16, 17, 18, 19, 30, 62, 63];

pub const TABLE4_TOTAL: f64 = 248.0;

/// Polar angles of the four-user fold example, about the origin.
pub const TABLE1_PHI: [f64; 4] = [3.65, 0.67, 1.53, 2.11];

/// Line angle used to illustrate the split.
pub const TABLE1_SPLIT_X: f64 = 1.53;

/// Printed folded angles and signs.
pub const TABLE1_FOLDED: [(f64, i8); 4] = [(0.51, -1), (0.67, 1), (1.53, 1), (2.11, 1)];

/// Expected side (1 or 2) of each user at [`TABLE1_SPLIT_X`].
pub const TABLE1_SIDES: [u8; 4] = [2, 1, 1, 2];

pub const TABLE1_CENTER: Point = Point::new(0.0, 0.0);

pub fn table4() -> Result<PartitionTree> {
    load_cost_tree(TABLE4_JSON)
}

pub fn table3_a() -> Result<PartitionTree> {
    load_cost_tree(TABLE3_A_JSON)
}

pub fn table3_b() -> Result<PartitionTree> {
    load_cost_tree(TABLE3_B_JSON)
}

/// Users at radius 10 about [`TABLE1_CENTER`] with the angles of
/// [`TABLE1_PHI`] and weights 1 to 4.
pub fn table1_instance() -> Result<Instance> {
    parse_instance_json(TABLE1_JSON, std::path::Path::new("paper_table1.json"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::run_dp;

    #[test]
    fn embedded_tables_parse() {
        assert_eq!(table4().unwrap().len(), 31);
        assert_eq!(table3_a().unwrap().len(), 7);
        assert_eq!(table3_b().unwrap().len(), 7);
        assert_eq!(table1_instance().unwrap().n(), 4);
    }

    #[test]
    fn table4_dp() {
        let mut t = table4().unwrap();
        assert_eq!(run_dp(&mut t).unwrap(), TABLE4_FRONTIER);
        for (k, f) in TABLE4_FINAL {
            assert_eq!(t.get(k).unwrap().final_label, Some(f), "node {k}");
        }
    }
}
