//! Planar primitives: vectors, poses, polylines, polygons, oriented boxes,
//! frenet frames and grid rasterization. All coordinates are meters in a
//! local metric frame.

mod frenet;
mod polygon;
mod polyline;
mod raster;
mod vec2;

pub use frenet::{project_to_frenet, FrenetFrame, DEFAULT_CAPTURE_DISTANCE};
pub use polygon::{polygon_edge_crossing, EdgeCrossing, Polygon};
pub use polyline::{
    line_intersection, point_segment_distance, segments_intersect, Polyline, Projection,
};
pub use raster::{rasterize_box, CellIndex, GridFrame, OccupancyGrid, OrientedBox};
pub use vec2::{circular_mean, normalize_angle, Pose2, Vec2, DEGENERATE_RESULTANT};
