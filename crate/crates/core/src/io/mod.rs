//! Scan, label, feature and weight file formats.

mod container;
mod csv;
mod kitti;

pub use self::csv::{load_csv_scan, read_csv_scan};
pub use container::{
    decode_features, decode_weights, encode_features, encode_weights, load_features, load_weights, save_features,
    save_weights, Tensor, MAGIC, VERSION,
};
pub use kitti::{
    decode_labels, decode_scan, encode_labels, encode_scan, load_kitti_labels, load_kitti_scan, load_label_file,
    save_kitti_labels, save_kitti_scan,
};
