//! MOT directory-mode carousel: objects, the directory that describes
//! them, the cycle builder and the receiving-side reassembly cache.

mod build;
mod directory;
mod object;
mod params;
mod receive;

pub use build::{build_carousel, CarouselBuildError, CarouselOptions};
pub use directory::{
    decode_directory_body, encode_directory_body, DirectoryEntry, DirectoryError, MotDirectory,
};
pub use object::{validate_content_name, ContentNameError, MotObject};
pub use params::{
    decode_parameter, decode_parameters, encode_parameter, param_id, HeaderParameter, ParamError,
    COMPRESSION_GZIP, CONTENT_NAME_CHARSET,
};
pub use receive::{CarouselReceiver, FeedError, FeedOutcome, ReceiverDiagnostics};
