use reqwest::blocking::Client;
use serde_json::Value;

use kite_node::api::{ApiRequest, ErrorBody, StateView};

use crate::CliError;

pub struct NodeClient {
    base: String,
    http: Client,
}

impl NodeClient {
    pub fn new(base: &str) -> Self {
        NodeClient {
            base: base.trim_end_matches('/').to_owned(),
            http: Client::new(),
        }
    }

    fn finish(&self, resp: reqwest::Result<reqwest::blocking::Response>) -> Result<Value, CliError> {
        let resp = resp.map_err(|e| CliError::Connection(format!("{}: {e}", self.base)))?;
        let status = resp.status().as_u16();
        let body: Value = resp.json().unwrap_or(Value::Null);
        if status == 200 {
            return Ok(body);
        }
        match serde_json::from_value::<ErrorBody>(body.clone()) {
            Ok(e) => Err(CliError::Api { status, error: e.error, reason: e.reason }),
            Err(_) => Err(CliError::Api {
                status,
                error: "Http".into(),
                reason: body.to_string(),
            }),
        }
    }

    pub fn get(&self, path: &str) -> Result<Value, CliError> {
        self.finish(self.http.get(format!("{}{path}", self.base)).send())
    }

    pub fn post(&self, path: &str, body: &Value) -> Result<Value, CliError> {
        let mut req = self.http.post(format!("{}{path}", self.base));
        if !body.is_null() {
            req = req.json(body);
        }
        self.finish(req.send())
    }

    pub fn send(&self, req: &ApiRequest) -> Result<Value, CliError> {
        self.post(&req.path, &req.body)
    }

    pub fn state(&self) -> Result<StateView, CliError> {
        let v = self.get("/state")?;
        serde_json::from_value(v).map_err(|e| CliError::Protocol(format!("bad /state: {e}")))
    }
}
