use cvc_tensor::{Real, Tensor};

use crate::error::{Error, Result};

/// Dense C×H×W field of f32 values with named channels and coordinates.
///
/// Latitudes run north to south (strictly decreasing), one per row.
/// Longitudes are one per column.
#[derive(Clone, Debug, PartialEq)]
pub struct GridTensor {
    channels: Vec<String>,
    lat: Vec<f64>,
    lon: Vec<f64>,
    data: Vec<f32>,
}

impl GridTensor {
    pub fn new(channels: Vec<String>, lat: Vec<f64>, lon: Vec<f64>, data: Vec<f32>) -> Result<Self> {
        let expected = channels.len() * lat.len() * lon.len();
        if data.len() != expected {
            return Err(Error::Data(format!(
                "grid {}x{}x{} needs {expected} values, got {}",
                channels.len(),
                lat.len(),
                lon.len(),
                data.len()
            )));
        }
        if channels.is_empty() || lat.is_empty() || lon.is_empty() {
            return Err(Error::Data("grid dimensions must be nonzero".into()));
        }
        if lat.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Data("latitudes must be strictly decreasing".into()));
        }
        Ok(Self {
            channels,
            lat,
            lon,
            data,
        })
    }

    /// Same coordinates and channel names, new values.
    pub fn with_data(&self, data: Vec<f32>) -> Result<Self> {
        Self::new(self.channels.clone(), self.lat.clone(), self.lon.clone(), data)
    }

    pub fn channels(&self) -> &[String] {
        &self.channels
    }

    pub fn lat(&self) -> &[f64] {
        &self.lat
    }

    pub fn lon(&self) -> &[f64] {
        &self.lon
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    /// (C, H, W)
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.channels.len(), self.lat.len(), self.lon.len())
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn channel(&self, c: usize) -> &[f32] {
        let hw = self.lat.len() * self.lon.len();
        &self.data[c * hw..(c + 1) * hw]
    }

    pub fn get(&self, c: usize, h: usize, w: usize) -> f32 {
        let (_, hh, ww) = self.dims();
        self.data[(c * hh + h) * ww + w]
    }

    pub fn same_grid(&self, other: &GridTensor) -> bool {
        self.channels == other.channels && self.lat == other.lat && self.lon == other.lon
    }

    pub fn to_tensor<T: Real>(&self) -> Tensor<T> {
        let (c, h, w) = self.dims();
        Tensor::from_fn(vec![c, h, w], |i| T::from_f64(self.data[i] as f64))
    }
}

/// Cell-centre latitudes from +90 to −90 and longitudes from 0 eastward.
pub fn regular_coordinates(height: usize, width: usize) -> (Vec<f64>, Vec<f64>) {
    let dlat = 180.0 / height as f64;
    let lat = (0..height).map(|i| 90.0 - (i as f64 + 0.5) * dlat).collect();
    let dlon = 360.0 / width as f64;
    let lon = (0..width).map(|j| j as f64 * dlon).collect();
    (lat, lon)
}
