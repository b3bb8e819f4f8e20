//! Input parsing, partition mining and topic-network construction.

mod build;
mod categories;
mod parse;

pub use build::{build_topic_network, BuildReport, SUPER_NODE_NAME};
pub use categories::{mine_partitions, parse_category_file, CategoryGraph};
pub use parse::{
    parse_clickstream, parse_edge_list, parse_partition_file, ClickCounts, PartitionSpec, RawEdge,
    RawGraph, Side,
};
