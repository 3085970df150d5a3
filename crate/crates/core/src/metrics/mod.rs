//! Objective restoration metrics and dataset-level aggregation.

mod fwssnr;
mod report;
mod resample;
mod snr;
mod stoi;

pub use fwssnr::{fwssnr, fwssnr_frame, mel_filterbank, FwSsnrParams};
pub use report::{evaluate_set, restored_path_for, write_csv_summary, ItemReport, Metric, MetricReport, SplitSummary};
pub use resample::resample_poly;
pub use snr::{sdr, segsnr, SegSnrParams, SDR_CAP_DB};
pub use stoi::{stoi, STOI_FS};
