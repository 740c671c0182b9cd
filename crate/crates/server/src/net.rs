use std::io::{self, BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::Arc;
use std::thread;

use crate::protocol::{ErrorCode, ProtocolError, Reply, MAX_LINE};
use crate::{Library, ServerConfig, Session};

/// A bound listener. Each accepted connection gets its own thread and
/// [`Session`]; sessions share only the library.
pub struct Server {
    listener: TcpListener,
    library: Arc<Library>,
    config: ServerConfig,
}

impl Server {
    pub fn bind(addr: impl ToSocketAddrs, library: Arc<Library>, config: ServerConfig) -> io::Result<Server> {
        Ok(Server { listener: TcpListener::bind(addr)?, library, config })
    }

    pub fn local_addr(&self) -> io::Result<SocketAddr> {
        self.listener.local_addr()
    }

    /// Accepts connections until the listener fails.
    pub fn run(self) -> io::Result<()> {
        for stream in self.listener.incoming() {
            let stream = match stream {
                Ok(s) => s,
                Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
                Err(e) => return Err(e),
            };
            let library = Arc::clone(&self.library);
            let config = self.config;
            thread::spawn(move || {
                // a broken connection only ends its own session
                let _ = connection(stream, library, config);
            });
        }
        Ok(())
    }
}

pub fn serve(addr: impl ToSocketAddrs, library: Arc<Library>, config: ServerConfig) -> io::Result<()> {
    Server::bind(addr, library, config)?.run()
}

enum Line {
    Ok(Vec<u8>),
    TooLong,
    Eof,
}

/// Reads up to and excluding `\n`. Overlong lines are drained, not buffered.
fn read_line(r: &mut impl BufRead, buf: &mut Vec<u8>) -> io::Result<Line> {
    buf.clear();
    let mut overflow = false;
    let mut any = false;
    loop {
        let chunk = r.fill_buf()?;
        if chunk.is_empty() {
            return Ok(if !any {
                Line::Eof
            } else if overflow {
                Line::TooLong
            } else {
                Line::Ok(std::mem::take(buf))
            });
        }
        any = true;
        let (part, done) = match chunk.iter().position(|&b| b == b'\n') {
            Some(i) => (&chunk[..i], Some(i + 1)),
            None => (chunk, None),
        };
        if !overflow {
            if buf.len() + part.len() > MAX_LINE {
                overflow = true;
                buf.clear();
            } else {
                buf.extend_from_slice(part);
            }
        }
        let used = done.unwrap_or(chunk.len());
        r.consume(used);
        if done.is_some() {
            if overflow {
                return Ok(Line::TooLong);
            }
            if buf.last() == Some(&b'\r') {
                buf.pop();
            }
            return Ok(Line::Ok(std::mem::take(buf)));
        }
    }
}

fn connection(stream: TcpStream, library: Arc<Library>, config: ServerConfig) -> io::Result<()> {
    stream.set_nodelay(true)?;
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut writer = io::BufWriter::new(stream);
    let mut session = Session::new(library, config);
    let mut buf = Vec::new();
    loop {
        let (reply, close) = match read_line(&mut reader, &mut buf)? {
            Line::Eof => return Ok(()),
            Line::TooLong => {
                (Reply::error(ProtocolError::new(ErrorCode::BadJson, format!("line exceeds {MAX_LINE} bytes"))), false)
            }
            Line::Ok(line) => {
                let out = session.handle_line(&line);
                buf = line;
                (out.reply, out.close)
            }
        };
        writer.write_all(reply.to_line().as_bytes())?;
        writer.write_all(b"\n")?;
        writer.flush()?;
        if close {
            return Ok(());
        }
    }
}
