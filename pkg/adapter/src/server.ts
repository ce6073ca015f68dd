import * as fs from 'fs';
import * as http from 'http';
import express, { Express, NextFunction, Request, Response } from 'express';

import { RequestError, decodeBase64Strict, decodePngImage } from './image';
import { AdapterConfig, OracleAdapter } from './model';

/**
 * Builds the express app speaking the oracle wire protocol:
 *   POST /v1/score_batch  {"images": [base64 PNG, ...]} -> {"scores": [...]}
 *   POST /v1/info         {} -> {"name", "input": {width, height, channels}}
 * Request problems answer 400, unknown paths 404, wrong methods 405, and
 * model failures 500 — always as a {"error": message} envelope.
 */
export function createApp(adapter: OracleAdapter): Express {
  const app = express();
  app.use(express.json({ limit: '256mb' }));

  app.post('/v1/score_batch', (req: Request, res: Response, next: NextFunction) => {
    try {
      const body = req.body;
      if (typeof body !== 'object' || body === null || !Array.isArray(body.images)) {
        throw new RequestError("request body must be {\"images\": [...]}");
      }
      // decode the whole batch before the model sees anything, so a bad
      // member can never leave a half-scored batch behind
      const images = (body.images as unknown[]).map((entry, i) => {
        if (typeof entry !== 'string') {
          throw new RequestError(`image ${i}: expected a base64 string`);
        }
        try {
          return decodePngImage(decodeBase64Strict(entry));
        } catch (err) {
          if (err instanceof RequestError) {
            throw new RequestError(`image ${i}: ${err.message}`);
          }
          throw err;
        }
      });
      res.json({ scores: adapter.scoreBatch(images) });
    } catch (err) {
      next(err);
    }
  });

  app.post('/v1/info', (_req: Request, res: Response) => {
    res.json({ name: adapter.model.name, input: adapter.inputSpec });
  });

  app.all('/v1/score_batch', methodNotAllowed);
  app.all('/v1/info', methodNotAllowed);

  app.use((_req: Request, res: Response) => {
    res.status(404).json({ error: 'no such endpoint' });
  });

  app.use((err: Error, _req: Request, res: Response, _next: NextFunction) => {
    if (err instanceof RequestError) {
      res.status(400).json({ error: err.message });
    } else if (isBodyParseError(err)) {
      res.status(400).json({ error: `malformed JSON body: ${err.message}` });
    } else {
      res.status(500).json({ error: err.message });
    }
  });

  return app;
}

function methodNotAllowed(_req: Request, res: Response): void {
  res.status(405).json({ error: 'method not allowed; POST JSON to this endpoint' });
}

function isBodyParseError(err: Error): boolean {
  return 'status' in err && (err as { status?: number }).status === 400;
}

export interface RunningServer {
  server: http.Server;
  url: string;
}

/** Starts the adapter on the given host/port; port 0 picks a free one. */
export function startServer(adapter: OracleAdapter, port: number,
                            host = '127.0.0.1'): Promise<RunningServer> {
  const app = createApp(adapter);
  return new Promise((resolve, reject) => {
    const server = app.listen(port, host, () => {
      const addr = server.address();
      if (addr === null || typeof addr === 'string') {
        reject(new Error('server reported no bound address'));
        return;
      }
      resolve({ server, url: `http://${host}:${addr.port}` });
    });
    server.on('error', reject);
  });
}

export function loadConfig(path: string): AdapterConfig {
  return JSON.parse(fs.readFileSync(path, 'utf-8')) as AdapterConfig;
}

function parseArgs(argv: string[]): { config: string; port: number; host: string } {
  const opts = { config: '', port: 0, host: '127.0.0.1' };
  for (let i = 0; i < argv.length; i += 2) {
    const [flag, value] = [argv[i], argv[i + 1]];
    if (value === undefined) throw new Error(`missing value for ${flag}`);
    if (flag === '--config') opts.config = value;
    else if (flag === '--port') opts.port = Number(value);
    else if (flag === '--host') opts.host = value;
    else throw new Error(`unknown flag ${flag}`);
  }
  if (!opts.config) throw new Error('usage: server --config <file> [--port N] [--host H]');
  if (!Number.isInteger(opts.port) || opts.port < 0) {
    throw new Error(`invalid port ${opts.port}`);
  }
  return opts;
}

async function main(): Promise<void> {
  const opts = parseArgs(process.argv.slice(2));
  const adapter = new OracleAdapter(loadConfig(opts.config));
  const { server, url } = await startServer(adapter, opts.port, opts.host);
  console.log(`scoring server for '${adapter.model.name}' at ${url}`);
  for (const signal of ['SIGINT', 'SIGTERM'] as const) {
    process.on(signal, () => {
      server.close(() => process.exit(0));
    });
  }
}

if (require.main === module) {
  main().catch((err) => {
    console.error(err.message);
    process.exit(1);
  });
}
